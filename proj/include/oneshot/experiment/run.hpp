#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <future>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "oneshot/classifiers/model_io.hpp"
#include "oneshot/experiment/config.hpp"
#include "oneshot/experiment/files.hpp"
#include "oneshot/experiment/report.hpp"
#include "oneshot/metrics/io.hpp"

namespace oneshot {

inline const char* const kToolVersion = "0.1.0";

struct ExperimentInputs {
  std::vector<GestureLabel> labels;
  std::vector<LabeledInstance> seeds;                  // lexicon order
  std::vector<std::vector<LabeledInstance>> held_out;  // [class], data order, seed excluded
};

namespace detail {

inline std::filesystem::path resolve(const ExperimentConfig& c, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !c.base_directory.empty() ? c.base_directory / path : path;
}

/// Runs `fn`, rethrowing any failure as an ExperimentError of `kind` at `stage`.
template <class Fn>
auto at_stage(ErrorKind kind, const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentError(kind, stage, e.what());
  }
}

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Failures are
/// collected per index and the lowest-index one is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(n, std::max<std::size_t>(1, threads));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::size_t bundled_index(const std::string& id, const std::string& label) {
  const std::string prefix = "bundled-" + label + "-";
  if (id.rfind(prefix, 0) != 0) throw std::invalid_argument("seed id '" + id + "' is not an instance of " + label);
  try {
    return std::stoul(id.substr(prefix.size()));
  } catch (const std::exception&) {
    throw std::invalid_argument("seed id '" + id + "' has no instance number");
  }
}

}  // namespace detail

inline std::size_t worker_count(const ExperimentConfig& cfg) {
  return cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
}

/// Lexicon, one seed per class and the held-out pools, from the bundled
/// generator or from MSRC-12 recordings.
inline ExperimentInputs load_inputs(const ExperimentConfig& cfg) {
  ExperimentInputs in;
  const auto names = cfg.dataset.classes.empty() ? msrc12_upper_limb_lexicon() : cfg.dataset.classes;
  try {
    in.labels = make_labels(names);
    Lexicon check(in.labels, std::vector<Trajectory>(in.labels.size()));
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  const std::size_t n = in.labels.size();
  const bool by_id = cfg.seed_selection.rule == "ids";
  for (const auto& [label, id] : cfg.seed_selection.ids) {
    if (std::find(names.begin(), names.end(), label) == names.end()) {
      throw config_error("seed_selection.ids names unknown class '" + label + "'");
    }
  }
  auto seed_id = [&](const std::string& label) {
    auto it = cfg.seed_selection.ids.find(label);
    if (it == cfg.seed_selection.ids.end()) throw config_error("seed_selection.ids has no entry for '" + label + "'");
    return it->second;
  };

  std::vector<std::vector<LabeledInstance>> pool(n);
  if (cfg.dataset.source == "bundled") {
    const auto all = bundled_lexicon();
    for (std::size_t c = 0; c < n; ++c) {
      const auto it = std::find(all.begin(), all.end(), names[c]);
      if (it == all.end()) throw config_error("class '" + names[c] + "' is not in the bundled lexicon");
      std::size_t count = cfg.test.per_class + 1;
      if (by_id) {
        const auto k = detail::at_stage(ErrorKind::Config, "config", [&] { return detail::bundled_index(seed_id(names[c]), names[c]); });
        count = std::max(count, k + 1);
      }
      for (std::size_t k = 0; k < count; ++k) {
        pool[c].push_back({"bundled-" + names[c] + "-" + std::to_string(k),
                           bundled_instance(static_cast<std::size_t>(it - all.begin()), k, cfg.dataset.bundled_seed,
                                            cfg.dataset.bundled),
                           in.labels[c]});
      }
    }
  } else {
    detail::at_stage(ErrorKind::Data, "load", [&] {
      for (const auto& rec : cfg.dataset.recordings) {
        Msrc12Options opts;
        opts.lexicon = in.labels;
        opts.window_before = cfg.dataset.window_before;
        opts.window_after = cfg.dataset.window_after;
        opts.tag_time_scale = cfg.dataset.tag_time_scale;
        opts.id_prefix = std::filesystem::path(rec.skeleton).stem().string();
        auto loaded = load_msrc12(detail::resolve(cfg, rec.skeleton), detail::resolve(cfg, rec.tagstream), opts);
        for (auto& inst : loaded.instances) pool[static_cast<std::size_t>(inst.label.index - 1)].push_back(std::move(inst));
      }
    });
  }

  detail::at_stage(ErrorKind::Data, "load", [&] {
    for (std::size_t c = 0; c < n; ++c) {
      if (pool[c].empty()) throw std::runtime_error("no instance of class '" + names[c] + "'");
      std::size_t pick = 0;
      if (by_id) {
        const std::string id = seed_id(names[c]);
        auto it = std::find_if(pool[c].begin(), pool[c].end(), [&](const LabeledInstance& i) { return i.id == id; });
        if (it == pool[c].end()) throw std::runtime_error("seed instance '" + id + "' not found");
        pick = static_cast<std::size_t>(it - pool[c].begin());
      }
      in.seeds.push_back(pool[c][pick]);
      std::vector<LabeledInstance> rest;
      for (std::size_t i = 0; i < pool[c].size(); ++i) {
        if (i != pick) rest.push_back(std::move(pool[c][i]));
      }
      if (cfg.test.source == "held_out") {
        if (rest.size() < cfg.test.per_class) {
          throw std::runtime_error("class '" + names[c] + "' has " + std::to_string(rest.size()) +
                                   " held-out instances, test.per_class asks for " +
                                   std::to_string(cfg.test.per_class));
        }
        rest.resize(cfg.test.per_class);
      }
      in.held_out.push_back(std::move(rest));
    }
  });
  return in;
}

inline std::vector<GestureGist> extract_gists(const ExperimentConfig& cfg, const ExperimentInputs& in) {
  return detail::at_stage(ErrorKind::Compute, "gist", [&] {
    std::vector<GestureGist> out;
    for (const auto& s : in.seeds) out.push_back(extract_gist(s.trajectory, cfg.gist, s.label));
    return out;
  });
}

inline std::string test_instance_id(const GestureLabel& l, std::size_t k) {
  return "test-" + l.name + "-" + std::to_string(k);
}

/// Everything one replicate produced, in classifier order.
struct ReplicateOutput {
  ReplicateSeeds seeds;
  SynthesisParams synthesis;
  std::vector<SyntheticSample> dataset;
  std::vector<LabeledInstance> test;
  std::vector<TrainedModel> models;
  std::vector<std::vector<IdentificationRecord>> records;
  std::size_t gap_filled = 0;
  double max_dilation = 1.0;
};

/// Synthesizes the training set, builds the test set (through enactment
/// when enabled), trains every selected classifier and classifies the test
/// set. Replicate r is 1-based.
inline ReplicateOutput run_replicate(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                     const std::vector<GestureGist>& gists, std::size_t r,
                                     bool parallel_training = false) {
  ReplicateOutput out;
  out.seeds = replicate_seeds(cfg.seed, r);
  const std::string tag = " (" + replicate_tag(r) + ")";

  out.synthesis = cfg.synthesis;
  out.synthesis.rng_seed = out.seeds.synthesis;
  out.dataset = detail::at_stage(ErrorKind::Compute, "synthesis" + tag, [&] {
    return generate_dataset(Lexicon(in.labels, [&] {
                              std::vector<Trajectory> t;
                              for (const auto& s : in.seeds) t.push_back(s.trajectory);
                              return t;
                            }()),
                            gists, out.synthesis);
  });

  detail::at_stage(ErrorKind::Compute, "test-set" + tag, [&] {
    SynthesisParams test_params = cfg.synthesis;
    test_params.rng_seed = out.seeds.test;
    for (std::size_t c = 0; c < in.labels.size(); ++c) {
      for (std::size_t k = 1; k <= cfg.test.per_class; ++k) {
        Trajectory t = cfg.test.source == "held_out" ? in.held_out[c][k - 1].trajectory
                                                      : synthesize_one(gists[c], test_params, k).trajectory;
        if (cfg.enactment_enabled) {
          EnactmentConfig e = cfg.enactment;
          e.seed = derive_key({out.seeds.enactment, c, k});
          const Enactment done = detail::at_stage(ErrorKind::Compute, "enact" + tag, [&] { return enact(t, e); });
          out.gap_filled += done.gap_filled;
          out.max_dilation = std::max(out.max_dilation, done.dilation);
          t = done.trajectory;
        }
        out.test.push_back({test_instance_id(in.labels[c], k), std::move(t), in.labels[c]});
      }
    }
  });

  std::vector<LabeledInstance> train;
  for (const auto& s : out.dataset) train.push_back(s.instance());
  ClassifierConfig cc = cfg.classifier;
  cc.seed = out.seeds.classifier;
  auto fit = [&](Variant v) {
    return detail::at_stage(ErrorKind::Compute, "train " + to_string(v) + tag,
                            [&] { return oneshot::train(v, train, in.labels, cc); });
  };
  if (parallel_training && cfg.classifiers.size() > 1) {
    std::vector<std::future<TrainedModel>> jobs;
    for (Variant v : cfg.classifiers) jobs.push_back(std::async(std::launch::async, fit, v));
    for (auto& j : jobs) out.models.push_back(j.get());
  } else {
    for (Variant v : cfg.classifiers) out.models.push_back(fit(v));
  }

  for (const auto& m : out.models) {
    const std::string name = to_string(m.variant);
    out.records.push_back(detail::at_stage(ErrorKind::Compute, "classify " + name + tag, [&] {
      std::vector<IdentificationRecord> recs;
      for (const auto& inst : out.test) {
        const Prediction p = classify(m, inst.trajectory);
        const GestureLabel predicted = p.rejected ? GestureLabel{kRejectedLabel, 0} : p.label;
        recs.push_back({inst.id, inst.label, predicted, name});
      }
      return recs;
    }));
  }
  return out;
}

struct ExperimentReport {
  nlohmann::json document;
  std::vector<GestureLabel> labels;
  std::vector<std::string> classifiers;
  std::vector<std::vector<std::vector<IdentificationRecord>>> records;  // [classifier][replicate]
  std::vector<IdentificationRecord> human;

  double pooled_accuracy(const std::string& classifier) const {
    return document.at("classifiers").at(classifier).at("accuracy").at("pooled").get<double>();
  }
};

/// Everything computed by a run, before anything is written.
struct ExperimentRun {
  ExperimentConfig config;
  ExperimentInputs inputs;
  std::vector<GestureGist> gists;
  std::vector<ReplicateOutput> replicates;
  ExperimentReport report;
};

namespace detail {

inline nlohmann::json summary_json(const std::vector<double>& per_replicate, double pooled) {
  const Summary s = summarize(per_replicate);
  return {{"per_replicate", per_replicate}, {"mean", s.mean}, {"sd", s.sd},
          {"min", s.min},                   {"max", s.max},   {"pooled", pooled}};
}

inline std::vector<IdentificationRecord> restrict_to(const std::vector<IdentificationRecord>& recs,
                                                     const std::set<std::string>& ids) {
  std::vector<IdentificationRecord> out;
  for (const auto& r : recs) {
    if (ids.count(r.instance_id)) out.push_back(r);
  }
  if (out.size() != ids.size()) {
    std::set<std::string> have;
    for (const auto& r : out) have.insert(r.instance_id);
    for (const auto& id : ids) {
      if (!have.count(id)) throw std::runtime_error("human-labelled instance '" + id + "' is not in the test set");
    }
  }
  return out;
}

inline ExperimentReport assemble_report(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                        const std::vector<ReplicateOutput>& reps) {
  using nlohmann::json;
  ExperimentReport rep;
  rep.labels = in.labels;
  for (Variant v : cfg.classifiers) rep.classifiers.push_back(to_string(v));
  rep.records.resize(rep.classifiers.size());
  for (std::size_t k = 0; k < rep.classifiers.size(); ++k) {
    for (const auto& r : reps) rep.records[k].push_back(r.records[k]);
  }

  json& doc = rep.document;
  doc["format"] = "oneshot-report";
  doc["version"] = kFileFormatVersion;
  json seeds = json::array();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& s = reps[r].seeds;
    seeds.push_back({{"replicate", r + 1},
                     {"synthesis", s.synthesis},
                     {"classifier", s.classifier},
                     {"enactment", s.enactment},
                     {"test", s.test}});
  }
  doc["provenance"] = {{"tool_version", kToolVersion},
                       {"config_hash", config_hash(cfg)},
                       {"seed", cfg.seed},
                       {"replicates", cfg.replicates},
                       {"replicate_seeds", seeds}};
  doc["config"] = result_config_json(cfg);
  json lexicon = json::array(), seed_ids = json::array();
  for (const auto& l : in.labels) lexicon.push_back(l.name);
  for (const auto& s : in.seeds) seed_ids.push_back({{"label", s.label.name}, {"instance_id", s.id}});
  doc["lexicon"] = lexicon;
  doc["seeds"] = seed_ids;
  doc["test_set"] = {{"source", cfg.test.source},
                     {"per_class", cfg.test.per_class},
                     {"size", cfg.test.per_class * in.labels.size()},
                     {"enacted", cfg.enactment_enabled}};

  json classifiers = json::object();
  double mean_accuracy = 0.0;
  for (std::size_t k = 0; k < rep.classifiers.size(); ++k) {
    const std::string& name = rep.classifiers[k];
    std::vector<double> acc, ai;
    json per_rep = json::array(), files = json::array();
    std::vector<IdentificationRecord> pooled;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const auto& recs = rep.records[k][r];
      const ConfusionMatrix cm = confusion(recs, in.labels);
      acc.push_back(accuracy(cm));
      ai.push_back(agreement_index(RecognizerResult{name, recs}));
      per_rep.push_back(confusion_to_json(cm));
      files.push_back("records/" + name + "_" + replicate_tag(r + 1) + ".csv");
      pooled.insert(pooled.end(), recs.begin(), recs.end());
    }
    const ConfusionMatrix all = confusion(pooled, in.labels);
    classifiers[name] = {{"accuracy", summary_json(acc, accuracy(all))},
                         {"agreement_index", summary_json(ai, agreement_index(RecognizerResult{name, pooled}))},
                         {"confusion", confusion_to_json(all)},
                         {"confusion_per_replicate", per_rep},
                         {"records", files}};
    mean_accuracy += accuracy(all) / static_cast<double>(rep.classifiers.size());
  }
  doc["classifiers"] = classifiers;
  doc["classifier_mean_accuracy"] = mean_accuracy;

  json enactment = nullptr;
  if (cfg.enactment_enabled) {
    json gaps = json::array(), dil = json::array();
    for (const auto& r : reps) {
      gaps.push_back(r.gap_filled);
      dil.push_back(r.max_dilation);
    }
    enactment = {{"gap_filled_frames", gaps}, {"max_dilation", dil}};
  }
  doc["enactment"] = enactment;

  doc["coherency"] = nullptr;
  doc["machine_coherency"] = nullptr;
  if (!cfg.human_labels.empty()) {
    const auto path = resolve(cfg, cfg.human_labels);
    rep.human = at_stage(ErrorKind::Data, "human-labels", [&] {
      auto h = read_records_csv(path, in.labels);
      for (const auto& r : h) {
        if (r.true_label.index == 0) throw std::runtime_error("label '" + r.true_label.name + "' is not in the lexicon");
      }
      if (h.size() < 2) throw std::runtime_error("need at least 2 human records");
      return h;
    });
    const RecognizerResult reference{"human", rep.human};
    const std::set<std::string> ids = reference.instance_ids();
    std::vector<CoherencyReport> tables;
    json per_rep = json::array();
    at_stage(ErrorKind::Data, "coherency", [&] {
      for (std::size_t r = 0; r < reps.size(); ++r) {
        std::vector<RecognizerResult> machines;
        for (std::size_t k = 0; k < rep.classifiers.size(); ++k) {
          machines.push_back({rep.classifiers[k], restrict_to(rep.records[k][r], ids)});
        }
        tables.push_back(coherency_report(machines, reference, in.labels));
        per_rep.push_back(coherency_to_json(tables.back()));
      }
    });
    doc["coherency"] = {{"reference", "human"},
                        {"records", "records/human.csv"},
                        {"human_records", rep.human.size()},
                        {"human_accuracy", accuracy(confusion(rep.human, in.labels))},
                        {"human_agreement_index", agreement_index(reference)},
                        {"mean", coherency_to_json(mean_report(tables))},
                        {"per_replicate", per_rep}};
  } else if (rep.classifiers.size() > 1) {
    const std::size_t m = rep.classifiers.size();
    std::vector<std::vector<double>> matrix(m, std::vector<double>(m, 0.0));
    for (std::size_t r = 0; r < reps.size(); ++r) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          matrix[i][j] += coherency(RecognizerResult{rep.classifiers[i], rep.records[i][r]},
                                    RecognizerResult{rep.classifiers[j], rep.records[j][r]}) /
                          static_cast<double>(reps.size());
        }
      }
    }
    doc["machine_coherency"] = {{"machines", rep.classifiers}, {"matrix", matrix}, {"aggregation", "mean of replicates"}};
  }
  return rep;
}

}  // namespace detail

/// The whole pipeline in memory: nothing is written.
inline ExperimentRun compute_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentRun run;
  run.config = cfg;
  run.inputs = load_inputs(cfg);
  run.gists = extract_gists(cfg, run.inputs);
  run.replicates.resize(cfg.replicates);
  const std::size_t threads = worker_count(cfg);
  detail::parallel_for(cfg.replicates, threads, [&](std::size_t i) {
    run.replicates[i] = run_replicate(cfg, run.inputs, run.gists, i + 1, threads > cfg.replicates);
  });
  run.report = detail::assemble_report(cfg, run.inputs, run.replicates);
  return run;
}

/// Writes report.json, records/, tables/ and matrices/ (plus instances/,
/// gists/, datasets/ and models/ when intermediates are requested) into `dir`.
inline void write_run(const ExperimentRun& run, const std::filesystem::path& dir) {
  const auto& rep = run.report;
  for (std::size_t k = 0; k < rep.classifiers.size(); ++k) {
    for (std::size_t r = 0; r < rep.records[k].size(); ++r) {
      write_records_csv(dir / "records" / (rep.classifiers[k] + "_" + replicate_tag(r + 1) + ".csv"), rep.records[k][r]);
    }
  }
  if (!rep.human.empty()) write_records_csv(dir / "records" / "human.csv", rep.human);
  if (run.config.write_intermediates) {
    write_json(dir / "instances" / "seeds.json", instance_set_to_json(run.inputs.seeds));
    write_gists(dir / "gists", run.gists);
    for (std::size_t r = 0; r < run.replicates.size(); ++r) {
      const auto& out = run.replicates[r];
      const std::string tag = replicate_tag(r + 1);
      write_json(dir / "datasets" / ("dataset_" + tag + ".json"), dataset_to_json(out.dataset, out.synthesis));
      write_json(dir / "instances" / ("test_" + tag + ".json"), instance_set_to_json(out.test));
      for (const auto& m : out.models) {
        write_json(dir / "models" / (to_string(m.variant) + "_" + tag + ".json"), model_to_json(m));
      }
    }
  }
  write_json(dir / "report.json", rep.document);
  render_report(rep.document, dir);
}

namespace detail {

/// An existing output directory is replaced only when it is empty or holds
/// a previous report.
inline void check_output_target(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir)) return;
  if (!fs::is_directory(dir)) throw config_error("output path " + dir.string() + " is not a directory");
  if (fs::is_empty(dir) || fs::exists(dir / "report.json")) return;
  throw config_error("output directory " + dir.string() + " exists and does not hold a previous report");
}

}  // namespace detail

/// Runs the experiment and writes its outputs. Files are staged in a
/// sibling directory and moved into place only after every stage succeeded;
/// on failure the staging directory is removed.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(cfg.output_directory);
  detail::check_output_target(dir);
  ExperimentRun run = compute_experiment(cfg);
  const fs::path staging = dir.string() + ".partial";
  detail::at_stage(ErrorKind::Data, "write", [&] {
    try {
      fs::remove_all(staging);
      fs::create_directories(staging);
      write_run(run, staging);
      fs::remove_all(dir);
      if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
      fs::rename(staging, dir);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(staging, ec);
      throw;
    }
  });
  return std::move(run.report);
}

}  // namespace oneshot
