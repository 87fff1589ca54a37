// oneshot: command-line front end. Every stage reads and writes the shared
// file formats, so `ingest | gist | synth | train | classify | metrics`
// composes through the filesystem and `run` does all of it in one go.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oneshot/classifiers/model_io.hpp"
#include "oneshot/experiment/run.hpp"

namespace fs = std::filesystem;
using namespace oneshot;
using nlohmann::json;

namespace {

struct ConfigOptions {
  std::string file;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Override a config key, e.g. --set synthesis.m_des=10")->take_all();
  }
  ExperimentConfig load() const { return load_config(file, overrides); }
};

/// Labels present in a set, ordered by lexicon index then first appearance.
std::vector<GestureLabel> labels_in(const std::vector<LabeledInstance>& set) {
  std::vector<GestureLabel> out;
  for (const auto& inst : set) {
    if (std::none_of(out.begin(), out.end(), [&](const GestureLabel& l) { return l.name == inst.label.name; })) {
      out.push_back(inst.label);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GestureLabel& a, const GestureLabel& b) { return a.index < b.index; });
  return out;
}

/// One seed per class of the configured lexicon: the first instance with
/// that label, or the instance named in seed_selection.ids. Seeds are
/// relabelled so indices follow the configured lexicon.
std::vector<LabeledInstance> select_seeds(const std::vector<LabeledInstance>& set, const ExperimentConfig& cfg) {
  const auto labels = make_labels(cfg.dataset.classes.empty() ? msrc12_upper_limb_lexicon() : cfg.dataset.classes);
  std::vector<LabeledInstance> out;
  for (const auto& label : labels) {
    const LabeledInstance* pick = nullptr;
    for (const auto& inst : set) {
      if (inst.label.name != label.name) continue;
      if (cfg.seed_selection.rule == "ids") {
        auto it = cfg.seed_selection.ids.find(label.name);
        if (it == cfg.seed_selection.ids.end()) throw config_error("seed_selection.ids has no entry for '" + label.name + "'");
        if (inst.id != it->second) continue;
      }
      pick = &inst;
      break;
    }
    if (pick == nullptr) throw std::runtime_error("no seed instance for class '" + label.name + "'");
    out.push_back({pick->id, pick->trajectory, label});
  }
  return out;
}

int cmd_ingest(const std::string& skeleton, const std::string& tagstream, std::size_t bundled, std::uint64_t bundled_seed,
               const ConfigOptions& co, const std::string& out) {
  const auto cfg = co.load();
  std::vector<LabeledInstance> set;
  if (bundled > 0) {
    set = bundled_instances(bundled, bundled_seed, cfg.dataset.bundled);
  } else {
    Msrc12Options opts;
    if (!cfg.dataset.classes.empty()) opts.lexicon = make_labels(cfg.dataset.classes);
    opts.window_before = cfg.dataset.window_before;
    opts.window_after = cfg.dataset.window_after;
    opts.tag_time_scale = cfg.dataset.tag_time_scale;
    opts.id_prefix = fs::path(skeleton).stem().string();
    const auto r = load_msrc12(skeleton, tagstream, opts);
    set = r.instances;
    std::cerr << "ingest: " << set.size() << " instances, " << r.skipped_unknown_label << " unknown labels, "
              << r.skipped_empty_window << " empty windows, " << r.dropped_frames << " dropped frames\n";
  }
  write_json(out, instance_set_to_json(set));
  return kExitOk;
}

int cmd_gist(const std::string& instances, const ConfigOptions& co, const std::string& out_dir,
             const std::string& seeds_out) {
  const auto cfg = co.load();
  const auto seeds = select_seeds(read_instance_set(instances), cfg);
  std::vector<GestureGist> gists;
  for (const auto& s : seeds) gists.push_back(extract_gist(s.trajectory, cfg.gist, s.label));
  write_gists(out_dir, gists);
  if (!seeds_out.empty()) write_json(seeds_out, instance_set_to_json(seeds));
  return kExitOk;
}

int cmd_synth(const std::string& gist_dir, const std::string& seeds_file, std::uint64_t rng_seed,
              const ConfigOptions& co, const std::string& out) {
  const auto cfg = co.load();
  const auto seeds = read_instance_set(seeds_file);
  std::vector<GestureLabel> labels;
  std::vector<Trajectory> trajectories;
  for (const auto& s : seeds) {
    labels.push_back(s.label);
    trajectories.push_back(s.trajectory);
  }
  SynthesisParams params = cfg.synthesis;
  params.rng_seed = rng_seed;
  const auto samples = generate_dataset(Lexicon(labels, trajectories), read_gists(gist_dir), params);
  write_json(out, dataset_to_json(samples, params));
  return kExitOk;
}

int cmd_train(const std::string& dataset, const std::string& classifier, std::uint64_t classifier_seed,
              const ConfigOptions& co, const std::string& out) {
  const auto cfg = co.load();
  std::vector<LabeledInstance> data;
  for (const auto& s : read_dataset(dataset)) data.push_back(s.instance());
  ClassifierConfig cc = cfg.classifier;
  cc.seed = classifier_seed;
  write_json(out, model_to_json(train(parse_variant(classifier), data, labels_in(data), cc)));
  return kExitOk;
}

int cmd_classify(const std::string& model_file, const std::string& instances, const std::string& recognizer,
                 const std::string& out) {
  const TrainedModel m = model_from_json(read_json(model_file));
  const std::string name = recognizer.empty() ? to_string(m.variant) : recognizer;
  std::vector<IdentificationRecord> records;
  for (const auto& inst : read_instance_set(instances)) {
    const Prediction p = classify(m, inst.trajectory);
    records.push_back({inst.id, inst.label, p.rejected ? GestureLabel{kRejectedLabel, 0} : p.label, name});
  }
  if (out.empty()) {
    write_records_csv(std::cout, records);
  } else {
    write_records_csv(fs::path(out), records);
  }
  return kExitOk;
}

int cmd_enact(const std::string& instances, std::uint64_t seed, const ConfigOptions& co, const std::string& frames_dir,
              const std::string& out) {
  const auto cfg = co.load();
  std::vector<LabeledInstance> result;
  std::size_t k = 0;
  for (const auto& inst : read_instance_set(instances)) {
    EnactmentConfig e = cfg.enactment;
    e.seed = derive_key({seed, k++});
    FrameSet frames;
    const Enactment done = enact(inst.trajectory, e, frames_dir.empty() ? nullptr : &frames);
    std::cerr << "enact: " << inst.id << " dilation " << done.dilation << ", " << done.gap_filled
              << " gap-filled marker frames\n";
    if (!frames_dir.empty()) {
      const fs::path dir = fs::path(frames_dir) / inst.id;
      fs::create_directories(dir);
      for (std::size_t f = 0; f < frames.size(); ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu", f);
        write_ppm(dir / (std::string(name) + ".ppm"), frames, f);
        write_pfm(dir / (std::string(name) + ".pfm"), frames, f);
      }
    }
    result.push_back({inst.id, done.trajectory, inst.label});
  }
  write_json(out, instance_set_to_json(result));
  return kExitOk;
}

int cmd_metrics(const std::vector<std::string>& files, const std::string& human_file, const std::string& out) {
  std::vector<IdentificationRecord> all;
  for (const auto& f : files) {
    const auto recs = read_records_csv(fs::path(f));
    all.insert(all.end(), recs.begin(), recs.end());
  }
  std::vector<IdentificationRecord> human;
  if (!human_file.empty()) human = read_records_csv(fs::path(human_file));
  auto label_source = all;
  label_source.insert(label_source.end(), human.begin(), human.end());
  const auto labels = labels_of(label_source);

  json doc;
  json recognizers = json::object();
  std::vector<RecognizerResult> machines;
  for (const auto& r : group_by_recognizer(all)) {
    const ConfusionMatrix cm = confusion(r.records, labels);
    json entry = {{"records", r.records.size()}, {"accuracy", accuracy(cm)}, {"confusion", confusion_to_json(cm)}};
    if (r.records.size() >= 2) entry["agreement_index"] = agreement_index(r);
    recognizers[r.recognizer_id] = entry;
    std::printf("%-12s records %4zu  accuracy %.6f  correct %zu/%zu\n", r.recognizer_id.c_str(), r.records.size(),
                accuracy(cm), cm.trace(), cm.total());
    machines.push_back(r);
  }
  doc["recognizers"] = recognizers;
  if (!human.empty()) {
    const RecognizerResult reference{"human", human};
    const auto rep = coherency_report(machines, reference, labels);
    doc["human"] = {{"records", human.size()},
                    {"accuracy", accuracy(confusion(human, labels))},
                    {"agreement_index", agreement_index(reference)}};
    doc["coherency"] = coherency_to_json(rep);
    write_coherency_csv(std::cout, rep);
  }
  if (!out.empty()) write_json(out, doc);
  return kExitOk;
}

int cmd_run(const ConfigOptions& co, std::uint64_t seed, const std::string& out, std::size_t replicates,
            std::size_t threads) {
  auto overrides = co.overrides;
  overrides.push_back("seed=" + std::to_string(seed));
  if (!out.empty()) overrides.push_back("output.directory=\"" + out + "\"");
  if (replicates > 0) overrides.push_back("replicates=" + std::to_string(replicates));
  if (threads > 0) overrides.push_back("threads=" + std::to_string(threads));
  const auto cfg = load_config(co.file, overrides);
  const auto rep = run_experiment(cfg);
  for (const auto& name : rep.classifiers) {
    const auto& acc = rep.document["classifiers"][name]["accuracy"];
    std::printf("%-4s accuracy pooled %.4f  (replicate mean %.4f, sd %.4f)\n", name.c_str(),
                acc["pooled"].get<double>(), acc["mean"].get<double>(), acc["sd"].get<double>());
  }
  std::printf("report: %s\n", (fs::path(cfg.output_directory) / "report.json").string().c_str());
  return kExitOk;
}

int cmd_render(const std::string& report, const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(report).parent_path() : fs::path(out);
  render_report(read_json(report), dir.empty() ? fs::path(".") : dir);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oneshot: one-shot gesture learning from a single example per class"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ConfigOptions co;
  std::string in, out, skeleton, tagstream, gists, seeds, model, classifier = "DTW", recognizer, frames, human, report;
  std::vector<std::string> files;
  std::size_t bundled = 0, replicates = 0, threads = 0;
  std::uint64_t seed = 0, bundled_seed = 1;

  auto* ingest = app.add_subcommand("ingest", "MSRC-12 recording (or the bundled lexicon) to an instance set");
  ingest->add_option("--skeleton", skeleton, "Skeleton text file")->check(CLI::ExistingFile);
  ingest->add_option("--tagstream", tagstream, "Tagstream file")->check(CLI::ExistingFile);
  ingest->add_option("--bundled", bundled, "Generate N instances per class of the bundled lexicon instead");
  ingest->add_option("--bundled-seed", bundled_seed, "Seed of the bundled generator");
  ingest->add_option("--out,-o", out, "Instance set to write")->required();
  co.attach(ingest);

  auto* gist = app.add_subcommand("gist", "Select one seed per class and extract its gist");
  gist->add_option("--instances,-i", in, "Instance set")->required()->check(CLI::ExistingFile);
  gist->add_option("--out,-o", out, "Directory for <label>.json gist files")->required();
  gist->add_option("--seeds-out", seeds, "Also write the selected seeds as an instance set");
  co.attach(gist);

  auto* synth = app.add_subcommand("synth", "Generate a training set from gists and seeds");
  synth->add_option("--gists,-g", gists, "Gist directory")->required()->check(CLI::ExistingDirectory);
  synth->add_option("--seeds,-s", seeds, "Seed instance set")->required()->check(CLI::ExistingFile);
  synth->add_option("--rng-seed", seed, "Synthesis stream seed")->required();
  synth->add_option("--out,-o", out, "Dataset file to write")->required();
  co.attach(synth);

  auto* train_cmd = app.add_subcommand("train", "Train one classifier on a dataset");
  train_cmd->add_option("--dataset,-d", in, "Dataset file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--classifier,-c", classifier, "HMM, SVM, CRF or DTW")->required();
  train_cmd->add_option("--classifier-seed", seed, "Seed for codebooks and initialization");
  train_cmd->add_option("--out,-o", out, "Model file to write")->required();
  co.attach(train_cmd);

  auto* classify_cmd = app.add_subcommand("classify", "Classify an instance set into identification records");
  classify_cmd->add_option("--model,-m", model, "Model file")->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--instances,-i", in, "Instance set")->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--recognizer", recognizer, "Recognizer id written to the records");
  classify_cmd->add_option("--out,-o", out, "Records CSV (stdout when omitted)");

  auto* enact_cmd = app.add_subcommand("enact", "Simulated robot enactment and camera re-extraction");
  enact_cmd->add_option("--instances,-i", in, "Instance set")->required()->check(CLI::ExistingFile);
  enact_cmd->add_option("--seed", seed, "Sensor noise seed");
  enact_cmd->add_option("--frames", frames, "Dump rendered frames (PPM color, PFM depth) under this directory");
  enact_cmd->add_option("--out,-o", out, "Instance set of re-extracted trajectories")->required();
  co.attach(enact_cmd);

  auto* metrics_cmd = app.add_subcommand("metrics", "Accuracy, agreement index, confusion and coherency from records");
  metrics_cmd->add_option("records", files, "Records CSV files")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--human", human, "Human reference records for coherency")->check(CLI::ExistingFile);
  metrics_cmd->add_option("--out,-o", out, "Write the metrics as JSON");

  auto* run = app.add_subcommand("run", "Full pipeline from config to report");
  run->add_option("--seed", seed, "Global seed")->required();
  run->add_option("--out,-o", out, "Output directory (overrides output.directory)");
  run->add_option("--replicates", replicates, "Overrides replicates");
  run->add_option("--threads", threads, "Worker threads (0: all cores)");
  co.attach(run);

  auto* render = app.add_subcommand("render-report", "Regenerate tables and heatmaps from report.json");
  render->add_option("report", report, "report.json")->required()->check(CLI::ExistingFile);
  render->add_option("--out,-o", out, "Directory (default: next to the report)");

  auto* config = app.add_subcommand("config", "Print the resolved configuration");
  co.attach(config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) {
      if ((bundled > 0) == (!skeleton.empty() || !tagstream.empty())) {
        std::cerr << "ingest: give either --bundled N or --skeleton and --tagstream\n";
        return kExitUsage;
      }
      if (bundled == 0 && (skeleton.empty() || tagstream.empty())) {
        std::cerr << "ingest: --skeleton and --tagstream go together\n";
        return kExitUsage;
      }
      return cmd_ingest(skeleton, tagstream, bundled, bundled_seed, co, out);
    }
    if (*gist) return cmd_gist(in, co, out, seeds);
    if (*synth) return cmd_synth(gists, seeds, seed, co, out);
    if (*train_cmd) return cmd_train(in, classifier, seed, co, out);
    if (*classify_cmd) return cmd_classify(model, in, recognizer, out);
    if (*enact_cmd) return cmd_enact(in, seed, co, frames, out);
    if (*metrics_cmd) return cmd_metrics(files, human, out);
    if (*run) return cmd_run(co, seed, out, replicates, threads);
    if (*render) return cmd_render(report, out);
    if (*config) {
      std::cout << config_to_json(co.load()).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const ExperimentError& e) {
    std::cerr << "oneshot: error in stage " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const ParseError& e) {
    std::cerr << "oneshot: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "oneshot: " << e.what() << '\n';
    return kExitData;
  }
  return kExitInternal;
}
