// actseq: command-line front end for the action-sequence prediction library.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "actseq/checkpoint.hpp"
#include "actseq/decode.hpp"
#include "actseq/eval.hpp"
#include "actseq/importance.hpp"
#include "actseq/reward.hpp"

using namespace actseq;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON config files hold flat keys mirroring the long flag names; explicit
// command-line flags always win. Config keys are injected as extra argv
// tokens before parsing, so unknown keys fail exactly like unknown flags.
std::vector<std::string> merge_config(const std::vector<std::string>& argv_tokens) {
  std::vector<std::string> args;
  std::string config_path;
  for (std::size_t i = 0; i < argv_tokens.size(); ++i) {
    const std::string& tok = argv_tokens[i];
    if (tok == "--config") {
      if (i + 1 >= argv_tokens.size()) {
        throw std::invalid_argument("--config requires a file path");
      }
      config_path = argv_tokens[++i];
    } else if (tok.rfind("--config=", 0) == 0) {
      config_path = tok.substr(9);
    } else {
      args.push_back(tok);
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw DataError("config: cannot open " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config: parse error in " + config_path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config: " + config_path + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    bool overridden = false;
    for (const std::string& tok : args) {
      if (tok == flag || tok.rfind(flag + "=", 0) == 0) {
        overridden = true;
        break;
      }
    }
    if (overridden) continue;
    args.push_back(flag);
    args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  return args;
}

fs::path resolve_out(const fs::path& out) {
  const char* root = std::getenv("ACTSEQ_OUT_ROOT");
  if (root != nullptr && *root != '\0' && out.is_relative()) return fs::path(root) / out;
  return out;
}

// Run directory with a deterministic manifest; the wall-clock timestamp goes
// to a separate file so reruns stay byte-identical elsewhere.
fs::path make_run_dir(const fs::path& out, const std::string& command, const json& config) {
  const fs::path dir = resolve_out(out);
  fs::create_directories(dir);
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["config"] = config;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  std::ofstream(dir / "timestamp.txt") << std::time(nullptr) << "\n";
  return dir;
}

struct TrainFlags {
  TrainingConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--iterations", cfg.iterations, "Training iterations");
    app->add_option("--batch-size", cfg.batch_size, "Sequences per iteration");
    app->add_option("--learning-rate", cfg.learning_rate, "Adam step size");
    app->add_option("--beta1", cfg.beta1, "Adam first-moment decay");
    app->add_option("--beta2", cfg.beta2, "Adam second-moment decay");
    app->add_option("--epsilon", cfg.epsilon, "Adam denominator floor");
    app->add_option("--dropout", cfg.dropout, "Dropout rate on recurrent inputs");
    app->add_option("--predict-length", cfg.predict_length, "Decoder steps N");
    app->add_option("--window", cfg.window, "Observation window length");
    app->add_option("--hidden-dim", cfg.hidden_dim, "LSTM/context dimension");
    app->add_option("--embed-dim", cfg.embed_dim, "Embedding dimension");
    app->add_option("--holdout", cfg.holdout, "Held-out fraction for splits");
  }

  json to_json() const {
    json j;
    j["iterations"] = cfg.iterations;
    j["batch-size"] = cfg.batch_size;
    j["learning-rate"] = cfg.learning_rate;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["epsilon"] = cfg.epsilon;
    j["dropout"] = cfg.dropout;
    j["seed"] = cfg.seed;
    j["predict-length"] = cfg.predict_length;
    j["window"] = cfg.window;
    j["hidden-dim"] = cfg.hidden_dim;
    j["embed-dim"] = cfg.embed_dim;
    j["holdout"] = cfg.holdout;
    return j;
  }
};

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad integer '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

const PredictionModel& require_prediction(const Checkpoint& ckpt, const std::string& path) {
  if (!std::holds_alternative<PredictionModel>(ckpt)) {
    throw DataError("checkpoint " + path + " does not hold a prediction model");
  }
  return std::get<PredictionModel>(ckpt);
}

Matrix observation_window(const FeatureSequence& seq, int window) {
  const std::size_t w = static_cast<std::size_t>(window);
  if (seq.length() < w) {
    throw std::invalid_argument("sequence '" + seq.id + "' shorter than window " +
                                std::to_string(window));
  }
  return slice_rows(seq.features, 0, w);
}

int run(int argc, char** argv) {
  CLI::App app{"Human action-sequence prediction toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--seed", seed, "Root random seed")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker pool size")->capture_default_str();
  app.parse_complete_callback([&]() { set_default_workers(jobs); });

  // --config is stripped and merged before parsing; this option only
  // documents it in the per-subcommand help text.
  std::string config_doc;
  auto configure = [&config_doc](CLI::App* sub) {
    sub->add_option("--config", config_doc, "JSON config file (flat keys = long flags)");
  };

  // ---- synth -------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  configure(synth);
  std::string synth_spec_path;
  std::string synth_out;
  synth->add_option("--spec", synth_spec_path, "Synthetic spec JSON")->required();
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->callback([&]() {
    SyntheticSpec spec = load_synthetic_spec(synth_spec_path);
    if (app.count("--seed") > 0) spec.seed = seed;
    const Dataset ds = generate_synthetic(spec);
    save_dataset(ds, resolve_out(synth_out));
  });

  // ---- train -------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  configure(train);
  std::string train_data, train_out, train_task = "prediction";
  TrainFlags train_flags;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Run output directory")->required();
  train->add_option("--task", train_task, "recognition | prediction")
      ->check(CLI::IsMember({"recognition", "prediction"}));
  train_flags.attach(train);
  train->callback([&]() {
    train_flags.cfg.seed = seed;
    json cfg = train_flags.to_json();
    cfg["data"] = train_data;
    cfg["task"] = train_task;
    const fs::path dir = make_run_dir(train_out, "train", cfg);
    const Dataset ds = load_dataset(train_data);
    std::vector<double> curve;
    if (train_task == "recognition") {
      auto result = train_recognition(ds, train_flags.cfg);
      curve = result.loss_curve;
      save_checkpoint(result.model, dir / "model.json");
    } else {
      auto result = train_prediction(ds, train_flags.cfg);
      curve = result.loss_curve;
      save_checkpoint(result.model, dir / "model.json");
    }
    std::ofstream csv(dir / "loss_curve.csv");
    csv << "iteration,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) csv << i << "," << fmt(curve[i]) << "\n";
  });

  // ---- recognize ---------------------------------------------------------
  auto* recog = app.add_subcommand("recognize", "Per-frame intention recognition");
  configure(recog);
  std::string rec_ckpt, rec_data, rec_out;
  recog->add_option("--checkpoint", rec_ckpt, "Recognition checkpoint")->required();
  recog->add_option("--data", rec_data, "Dataset directory")->required();
  recog->add_option("--out", rec_out, "Run output directory")->required();
  recog->callback([&]() {
    json cfg;
    cfg["checkpoint"] = rec_ckpt;
    cfg["data"] = rec_data;
    const fs::path dir = make_run_dir(rec_out, "recognize", cfg);
    const Checkpoint ckpt = load_checkpoint(rec_ckpt);
    if (!std::holds_alternative<RecognitionModel>(ckpt)) {
      throw DataError("checkpoint " + rec_ckpt + " does not hold a recognition model");
    }
    const auto& model = std::get<RecognitionModel>(ckpt);
    const Dataset ds = load_dataset(rec_data);

    std::ofstream frames(dir / "frames.csv");
    frames << "sequence_id,frame,predicted";
    for (int c = 0; c < model.intentions.size(); ++c) {
      frames << ",p_" << model.intentions.symbol(c);
    }
    frames << "\n";
    std::ofstream stable(dir / "stable.csv");
    stable << "sequence_id,intention,stable_frame,stable_ms\n";
    for (const auto& seq : ds.sequences) {
      const auto dists = model.recognize(seq.features);
      std::vector<int> preds;
      for (std::size_t t = 0; t < dists.size(); ++t) {
        const auto& p = dists[t].probs;
        const int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        preds.push_back(arg);
        frames << seq.id << "," << t << "," << model.intentions.symbol(arg);
        for (const double v : p) frames << "," << fmt(v);
        frames << "\n";
      }
      if (seq.intention >= 0) {
        const auto sc = time_to_stable_correct(preds, seq.intention, ds.sample_rate_hz);
        stable << seq.id << "," << ds.vocabulary.symbol(seq.intention) << ",";
        if (sc.never()) {
          stable << "-1,-1\n";
        } else {
          stable << *sc.frames << "," << fmt(sc.milliseconds) << "\n";
        }
      }
    }
  });

  // ---- predict -----------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Beam-decode future action sequences");
  configure(predict);
  std::string pred_ckpt, pred_data, pred_out;
  int pred_beams = 3, pred_horizon = 3;
  predict->add_option("--checkpoint", pred_ckpt, "Prediction checkpoint")->required();
  predict->add_option("--data", pred_data, "Dataset directory")->required();
  predict->add_option("--out", pred_out, "Run output directory")->required();
  predict->add_option("--beams", pred_beams, "Beam width K")->check(CLI::PositiveNumber);
  predict->add_option("--horizon", pred_horizon, "Prediction length N")->check(CLI::PositiveNumber);
  predict->callback([&]() {
    json cfg;
    cfg["checkpoint"] = pred_ckpt;
    cfg["data"] = pred_data;
    cfg["beams"] = pred_beams;
    cfg["horizon"] = pred_horizon;
    const fs::path dir = make_run_dir(pred_out, "predict", cfg);
    const Checkpoint ckpt = load_checkpoint(pred_ckpt);
    const auto& model = require_prediction(ckpt, pred_ckpt);
    const Dataset ds = load_dataset(pred_data);
    std::ofstream csv(dir / "beams.csv");
    bool header = true;
    for (const auto& seq : ds.sequences) {
      const auto ctx = model.encode(observation_window(seq, model.config.window));
      const auto set = beam_decode(model, ctx, pred_horizon, pred_beams);
      write_beam_csv(csv, set, model.vocab, header, seq.id);
      header = false;
    }
  });

  // ---- evaluate ----------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validated micro F1");
  configure(evaluate);
  std::string eval_data, eval_out;
  int eval_folds = 4;
  TrainFlags eval_flags;
  evaluate->add_option("--data", eval_data, "Dataset directory")->required();
  evaluate->add_option("--out", eval_out, "Run output directory")->required();
  evaluate->add_option("--folds", eval_folds, "Number of folds")->check(CLI::PositiveNumber);
  eval_flags.attach(evaluate);
  evaluate->callback([&]() {
    eval_flags.cfg.seed = seed;
    json cfg = eval_flags.to_json();
    cfg["data"] = eval_data;
    cfg["folds"] = eval_folds;
    const fs::path dir = make_run_dir(eval_out, "evaluate", cfg);
    const Dataset ds = load_dataset(eval_data);
    const auto cv = cross_validate(ds, eval_flags.cfg, eval_folds, seed);
    std::ofstream csv(dir / "cv.csv");
    csv << "fold,f1\n";
    for (std::size_t i = 0; i < cv.fold_f1.size(); ++i) {
      csv << (i + 1) << "," << fmt(cv.fold_f1[i]) << "\n";
    }
    csv << "mean," << fmt(cv.mean_f1) << "\n";
  });

  // ---- importance --------------------------------------------------------
  auto* importance = app.add_subcommand("importance", "Wrapper feature-subset ranking");
  configure(importance);
  std::string imp_data, imp_out, imp_subsets;
  TrainFlags imp_flags;
  importance->add_option("--data", imp_data, "Dataset directory")->required();
  importance->add_option("--out", imp_out, "Run output directory")->required();
  importance
      ->add_option("--subsets", imp_subsets,
                   "Semicolon-separated subsets of comma-joined group names, "
                   "e.g. 'early;late;early,late'")
      ->required();
  imp_flags.attach(importance);
  importance->callback([&]() {
    imp_flags.cfg.seed = seed;
    json cfg = imp_flags.to_json();
    cfg["data"] = imp_data;
    cfg["subsets"] = imp_subsets;
    const fs::path dir = make_run_dir(imp_out, "importance", cfg);
    const Dataset ds = load_dataset(imp_data);
    std::vector<FeatureSubset> subsets;
    std::stringstream ss(imp_subsets);
    std::string part;
    while (std::getline(ss, part, ';')) {
      std::vector<std::string> groups;
      std::stringstream gs(part);
      std::string g;
      while (std::getline(gs, g, ',')) groups.push_back(g);
      subsets.push_back(subset_from_groups(ds, groups));
    }
    const auto report = wrapper_rank(ds, subsets, imp_flags.cfg);
    std::ofstream curves(dir / "curves.csv");
    write_importance_curves_csv(curves, report);
    std::ofstream summary(dir / "summary.csv");
    write_importance_summary_csv(summary, report);
    std::ofstream deltas(dir / "deltas.csv");
    write_importance_deltas_csv(deltas, report);
  });

  // ---- reward ------------------------------------------------------------
  auto* reward = app.add_subcommand("reward", "Select a robot plan against a scenario");
  configure(reward);
  std::string rew_scenario, rew_ckpt, rew_data, rew_out, rew_sequence;
  int rew_beams = 3, rew_horizon = 0;
  reward->add_option("--scenario", rew_scenario, "World scenario JSON")->required();
  reward->add_option("--checkpoint", rew_ckpt, "Prediction checkpoint")->required();
  reward->add_option("--data", rew_data, "Dataset directory")->required();
  reward->add_option("--out", rew_out, "Run output directory")->required();
  reward->add_option("--beams", rew_beams, "Beam width K")->check(CLI::PositiveNumber);
  reward->add_option("--horizon", rew_horizon, "Override scenario horizon");
  reward->add_option("--sequence", rew_sequence, "Sequence id to observe (default: first)");
  reward->callback([&]() {
    json cfg;
    cfg["scenario"] = rew_scenario;
    cfg["checkpoint"] = rew_ckpt;
    cfg["data"] = rew_data;
    cfg["beams"] = rew_beams;
    cfg["horizon"] = rew_horizon;
    cfg["sequence"] = rew_sequence;
    const fs::path dir = make_run_dir(rew_out, "reward", cfg);
    WorldModel world = load_scenario(rew_scenario);
    if (rew_horizon > 0) world.horizon = rew_horizon;
    const Checkpoint ckpt = load_checkpoint(rew_ckpt);
    const auto& model = require_prediction(ckpt, rew_ckpt);
    const Dataset ds = load_dataset(rew_data);
    if (ds.sequences.empty()) throw DataError("reward: dataset has no sequences");
    const FeatureSequence* seq = &ds.sequences.front();
    if (!rew_sequence.empty()) {
      seq = nullptr;
      for (const auto& s : ds.sequences) {
        if (s.id == rew_sequence) seq = &s;
      }
      if (seq == nullptr) throw DataError("reward: unknown sequence '" + rew_sequence + "'");
    }
    const auto ctx = model.encode(observation_window(*seq, model.config.window));

    std::ofstream estimates(dir / "estimates.csv");
    estimates << "k,cumulative_probability,robot_plan,estimated_reward\n";
    PlanChoice final_choice;
    for (int k = 1; k <= rew_beams; ++k) {
      const auto set = beam_decode(model, ctx, world.horizon, k);
      const auto choice = select_robot_plan(world, set);
      std::string plan;
      for (std::size_t i = 0; i < choice.robot.size(); ++i) {
        if (i > 0) plan += "+";
        plan += world.robot_actions.symbol(choice.robot[i]);
      }
      estimates << k << "," << fmt(cumulative_probability(set)) << "," << plan << ","
                << fmt(choice.estimated_reward) << "\n";
      if (k == rew_beams) final_choice = choice;
    }
    std::ofstream plan(dir / "plan.csv");
    plan << "step,robot_action\n";
    for (std::size_t i = 0; i < final_choice.robot.size(); ++i) {
      plan << (i + 1) << "," << world.robot_actions.symbol(final_choice.robot[i]) << "\n";
    }
  });

  // ---- study -------------------------------------------------------------
  auto* study = app.add_subcommand("study", "Parameter studies over a value grid");
  configure(study);
  std::string study_kind, study_values, study_seeds, study_data, study_out;
  int study_horizon = 3;
  TrainFlags study_flags;
  study->add_option("--kind", study_kind, "prediction_length | beam_coverage | context_dim")
      ->required();
  study->add_option("--values", study_values, "Comma-separated grid values")->required();
  study->add_option("--seeds", study_seeds, "Comma-separated seeds")->required();
  study->add_option("--data", study_data, "Dataset directory")->required();
  study->add_option("--out", study_out, "Run output directory")->required();
  study->add_option("--max-horizon", study_horizon, "Evaluation horizon");
  study_flags.attach(study);
  study->callback([&]() {
    study_flags.cfg.seed = seed;
    json cfg = study_flags.to_json();
    cfg["kind"] = study_kind;
    cfg["values"] = study_values;
    cfg["seeds"] = study_seeds;
    cfg["data"] = study_data;
    cfg["max-horizon"] = study_horizon;
    const fs::path dir = make_run_dir(study_out, "study", cfg);
    const Dataset ds = load_dataset(study_data);
    StudyGrid grid;
    grid.kind = study_kind_from_name(study_kind);
    grid.values = parse_int_list(study_values, "--values");
    for (const int s : parse_int_list(study_seeds, "--seeds")) {
      grid.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    grid.base = study_flags.cfg;
    grid.max_horizon = study_horizon;
    const auto report = run_study(grid, ds);
    std::ofstream csv(dir / "study.csv");
    write_study_csv(csv, report);
  });

  try {
    std::vector<std::string> tokens(argv + 1, argv + argc);
    std::vector<std::string> args = merge_config(tokens);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ResourceLimitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
