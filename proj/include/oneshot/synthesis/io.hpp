#pragma once

#include "oneshot/core/json_io.hpp"
#include "oneshot/synthesis/synthesis.hpp"

namespace oneshot {

inline json sample_to_json(const SyntheticSample& s) {
  json j = instance_to_json(s.instance());
  j["provenance"] = {{"gist_id", s.provenance.gist_id},
                     {"sample_index", s.provenance.sample_index},
                     {"rng_seed", s.provenance.rng_seed},
                     {"synthetic", s.provenance.synthetic}};
  return j;
}

inline SyntheticSample sample_from_json(const json& j) {
  LabeledInstance inst = instance_from_json(j);
  SyntheticSample s{std::move(inst.trajectory), inst.label, {}};
  const json& p = j.at("provenance");
  s.provenance.gist_id = p.at("gist_id").get<std::string>();
  s.provenance.sample_index = p.at("sample_index").get<std::size_t>();
  s.provenance.rng_seed = p.at("rng_seed").get<std::uint64_t>();
  s.provenance.synthetic = p.value("synthetic", true);
  return s;
}

}  // namespace oneshot
