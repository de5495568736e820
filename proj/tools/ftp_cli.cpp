#include "ftp_cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ftp/adsb_ingest.hpp"
#include "ftp/digest.hpp"
#include "ftp/evaluation.hpp"
#include "ftp/llm_client.hpp"
#include "ftp/lstm.hpp"
#include "ftp/predictors.hpp"
#include "ftp/prompt_codec.hpp"
#include "ftp/synth_gen.hpp"
#include "ftp/windowing.hpp"

namespace ftp::cli {

namespace {

using json = nlohmann::ordered_json;

/// Reads `--config` files: a JSON object whose nested objects address
/// subcommands, e.g. {"sample": {"horizon": 4}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return describe(*app, default_also).dump();
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(fmt::format("config file is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

  static json describe(const CLI::App& app, bool default_also) {
    json j = json::object();
    for (const CLI::Option* opt : app.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto& r = opt->results();
        if (opt->get_expected_max() == 0) {
          j[name] = true;
        } else if (r.size() == 1) {
          j[name] = r.front();
        } else {
          j[name] = r;
        }
      } else if (default_also) {
        j[name] = opt->get_expected_max() == 0 ? json(false) : json(opt->get_default_str());
      }
    }
    return j;
  }

 private:
  static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const json& v : value) item.inputs.push_back(scalar(v, key));
      } else {
        item.inputs.push_back(scalar(value, key));
      }
      items.push_back(std::move(item));
    }
  }

  static std::string scalar(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError(fmt::format("config key '{}' has an unsupported value", key));
  }
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path));
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path));
  return out;
}

std::vector<Window> load_windows(const std::string& path) {
  auto in = open_in(path);
  return windowing::read_windows(in);
}

struct Prediction {
  std::size_t index = 0;
  std::optional<std::string> callsign;
  std::string model;
  std::string template_version;
  std::string completion;
  double latency_seconds = 0.0;
  int attempts = 0;
  std::optional<std::string> error;
};

json to_json(const Prediction& p) {
  json j;
  j["index"] = p.index;
  if (p.callsign) j["callsign"] = *p.callsign;
  j["model"] = p.model;
  j["template_version"] = p.template_version;
  j["completion"] = p.completion;
  j["latency_seconds"] = p.latency_seconds;
  j["attempts"] = p.attempts;
  if (p.error) j["error"] = *p.error;
  return j;
}

std::vector<Prediction> load_predictions(const std::string& path) {
  auto in = open_in(path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Prediction p;
      p.index = j.at("index").get<std::size_t>();
      if (j.contains("callsign")) p.callsign = j["callsign"].get<std::string>();
      p.model = j.at("model").get<std::string>();
      p.template_version = j.at("template_version").get<std::string>();
      p.completion = j.at("completion").get<std::string>();
      p.latency_seconds = j.at("latency_seconds").get<double>();
      p.attempts = j.at("attempts").get<int>();
      if (j.contains("error")) p.error = j["error"].get<std::string>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(fmt::format("{}:{}: malformed prediction: {}", path, row, e.what()));
    }
  }
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::size_t flights = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::string manifest;
  std::string from_manifest;
};

int do_synth(const SynthArgs& a, std::ostream& err) {
  synth::Corpus corpus;
  if (!a.from_manifest.empty()) {
    corpus = synth::parse_manifest(read_file(a.from_manifest));
    corpus.records = synth::regenerate(corpus.specs);
  } else {
    corpus = synth::generate_corpus(a.flights, a.seed);
  }
  {
    auto out = open_out(a.out);
    adsb::write_csv(out, corpus.records);
  }
  const std::string manifest = a.manifest.empty() ? a.out + ".manifest.json" : a.manifest;
  write_file(manifest, synth::manifest_json(corpus));
  err << fmt::format("synth: {} flights, {} records -> {} (manifest {})\n", corpus.specs.size(),
                     corpus.records.size(), a.out, manifest);
  return 0;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string in;
  std::string out;
  bool strict = false;
};

int do_ingest(const IngestArgs& a, std::ostream& err) {
  auto in = open_in(a.in);
  const auto read = adsb::read_csv(in, a.strict ? adsb::ParseMode::Strict : adsb::ParseMode::Tolerant, &err);
  const auto cleaned = adsb::clean_trajectories(read.records);
  std::vector<Trajectory> minutes;
  minutes.reserve(cleaned.trajectories.size());
  for (const Trajectory& t : cleaned.trajectories) minutes.push_back(adsb::aggregate_minutes(t));
  {
    auto out = open_out(a.out);
    adsb::write_csv(out, adsb::to_records(minutes));
  }
  const auto& s = cleaned.summary;
  err << fmt::format(
      "ingest: {} records, {} trajectories: kept {}, incomplete {}, invalid {}, duplicate {}; "
      "{} repeated rows collapsed, {} utc mismatches\n",
      read.records.size(), s.input_trajectories, s.kept, s.incomplete, s.invalid, s.duplicate, s.repeated_rows,
      read.utc_mismatches);
  return 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::string in;
  std::string out;
  int horizon = 1;
  int stride = 0;
  bool allow_any_horizon = false;
};

int do_sample(const SampleArgs& a, std::ostream& err) {
  auto in = open_in(a.in);
  const auto read = adsb::read_csv(in, adsb::ParseMode::Strict);
  const auto cleaned = adsb::clean_trajectories(read.records);
  const auto windows = windowing::sample_all(cleaned.trajectories, a.horizon,
                                             windowing::SampleOptions{a.stride, a.allow_any_horizon});
  {
    auto out = open_out(a.out);
    windowing::write_windows(out, windows);
  }
  err << fmt::format("sample: {} trajectories -> {} windows (horizon {})\n", cleaned.trajectories.size(),
                     windows.size(), a.horizon);
  return 0;
}

// ---------------------------------------------------------------- prompt

struct PromptArgs {
  std::string in;
  std::string out;
  bool with_assistant = false;
  bool inference = false;
};

int do_prompt(const PromptArgs& a, std::ostream& err) {
  const std::string source = read_file(a.in);
  std::istringstream in(source);
  const auto windows = windowing::read_windows(in);
  if (windows.empty()) throw Error(fmt::format("{} holds no windows", a.in));
  std::vector<prompt::PromptRecord> records;
  records.reserve(windows.size());
  for (const Window& w : windows) records.push_back(prompt::build_prompt(w, a.with_assistant));
  prompt::emit_dataset(records, a.out, windows.front().horizon(), sha256_hex(source));
  err << fmt::format("prompt: {} {} records -> {}\n", records.size(), a.with_assistant ? "training" : "inference",
                     a.out);
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string backend = "mock";
  std::string prompts;
  std::string windows;
  std::string out;
  std::string mock_behavior = "kinematic";
  std::string lstm_model;
  llm::EndpointConfig endpoint;
};

int do_predict(PredictArgs a, std::ostream& err) {
  std::vector<Prediction> preds;
  std::optional<std::vector<Window>> windows;
  if (!a.windows.empty()) windows = load_windows(a.windows);

  if (a.backend == "mock" || a.backend == "endpoint") {
    if (a.prompts.empty()) throw Error(fmt::format("--prompts is required for the {} backend", a.backend));
    const auto dataset = prompt::read_dataset(a.prompts);
    if (windows && windows->size() != dataset.records.size()) {
      throw Error(fmt::format("{} prompts but {} windows", dataset.records.size(), windows->size()));
    }
    std::unique_ptr<llm::Backend> backend;
    if (a.backend == "mock") {
      backend = std::make_unique<llm::MockBackend>(*llm::parse_mock_behavior(a.mock_behavior));
    } else {
      if (!a.endpoint.auth_token) a.endpoint.auth_token = llm::token_from_env();
      backend = std::make_unique<llm::EndpointBackend>(a.endpoint);
    }
    const auto items = llm::complete_all(*backend, dataset.records);
    for (std::size_t i = 0; i < items.size(); ++i) {
      Prediction p;
      p.index = i;
      if (windows) p.callsign = (*windows)[i].callsign;
      p.model = backend->name();
      p.template_version = dataset.manifest.template_version;
      if (items[i].result) {
        p.completion = items[i].result->text;
        p.latency_seconds = items[i].result->latency_seconds;
        p.attempts = items[i].result->attempts;
      } else {
        p.error = items[i].error;
      }
      preds.push_back(std::move(p));
    }
  } else {
    if (!windows) throw Error(fmt::format("--windows is required for the {} backend", a.backend));
    std::optional<lstm::LstmParams> params;
    if (a.backend == "lstm") {
      if (a.lstm_model.empty()) throw Error("--model is required for the lstm backend");
      params = lstm::load_params(a.lstm_model);
    }
    for (std::size_t i = 0; i < windows->size(); ++i) {
      const Window& w = (*windows)[i];
      Prediction p;
      p.index = i;
      p.callsign = w.callsign;
      p.model = a.backend;
      p.template_version = std::string(prompt::kTemplateVersion);
      p.attempts = 1;
      const auto start = std::chrono::steady_clock::now();
      try {
        std::vector<Waypoint> out;
        if (a.backend == "persistence") {
          out = predictors::predict_persistence(w, w.horizon());
        } else if (a.backend == "kinematic") {
          out = predictors::predict_kinematic(w, w.horizon());
        } else {
          out = lstm::lstm_predict(*params, w, w.horizon());
        }
        for (Waypoint& x : out) x = round_waypoint(x);
        p.completion = prompt::serialize_waypoints(out);
      } catch (const Error& e) {
        p.error = e.what();
      }
      p.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      preds.push_back(std::move(p));
    }
  }

  auto out = open_out(a.out);
  std::size_t failed = 0;
  for (const Prediction& p : preds) {
    out << to_json(p).dump() << '\n';
    if (p.error) ++failed;
  }
  err << fmt::format("predict: {} predictions from {} ({} errors) -> {}\n", preds.size(), a.backend, failed, a.out);
  return 0;
}

// ---------------------------------------------------------------- train-lstm

struct TrainArgs {
  std::string windows;
  std::string out;
  lstm::TrainConfig cfg;
  double few_shot = 1.0;
  std::uint64_t split_seed = 0;
};

int do_train(const TrainArgs& a, std::ostream& err) {
  auto windows = load_windows(a.windows);
  if (a.few_shot < 1.0) {
    windows = eval::few_shot_split(std::span<const Window>(windows), a.few_shot, a.split_seed);
  }
  err << fmt::format("train-lstm: {} training windows\n", windows.size());
  const auto report = lstm::lstm_train(windows, a.cfg, [&](int epoch, double loss) {
    err << fmt::format("train-lstm: epoch {} loss {:.6g}\n", epoch, loss);
  });
  lstm::save_params(report.params, a.out);
  return 0;
}

// ---------------------------------------------------------------- eval / report

struct EvalArgs {
  std::string windows;
  std::string predictions;
  std::string out;
  std::string format = "table";
  double few_shot = 1.0;
  std::uint64_t seed = 0;
  bool no_latency = false;
  double severe_radius = prompt::kDefaultSevereRadius;
};

void write_report(const eval::MetricsReport& report, const std::string& format, const std::string& path,
                  std::ostream& out) {
  const std::string text = eval::emit_report(report, *eval::parse_report_format(format));
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

int do_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto windows = load_windows(a.windows);
  const auto preds = load_predictions(a.predictions);
  if (windows.size() != preds.size()) {
    throw Error(fmt::format("{} windows but {} predictions", windows.size(), preds.size()));
  }
  std::vector<eval::Sample> samples;
  samples.reserve(windows.size());
  std::string model;
  std::string template_version{prompt::kTemplateVersion};
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Prediction& p = preds[i];
    if (p.index != i) throw Error(fmt::format("prediction {} is out of order (index {})", i, p.index));
    if (p.callsign && *p.callsign != windows[i].callsign) {
      throw Error(fmt::format("prediction {} is for {} but window {} is {}", i, *p.callsign, i, windows[i].callsign));
    }
    if (i == 0) {
      model = p.model;
      template_version = p.template_version;
    }
    auto outcome = p.error ? prompt::ParseOutcome::failure(prompt::FailureKind::MissingTrajectory,
                                                           "no completion: " + *p.error)
                           : prompt::parse_completion(p.completion, windows[i].horizon(), windows[i],
                                                      a.severe_radius);
    samples.push_back(eval::Sample{windows[i], std::move(outcome), p.latency_seconds});
  }
  if (a.few_shot < 1.0) {
    samples = eval::few_shot_split(std::span<const eval::Sample>(samples), a.few_shot, a.seed);
  }
  const auto report = eval::evaluate(samples, eval::EvalOptions{model, template_version, !a.no_latency});
  write_report(report, a.format, a.out, out);
  const auto& c = report.counts;
  err << fmt::format("eval: {} samples, {} evaluated, {} severe, {} missing, {} format\n", c.total, c.evaluated,
                     c.excluded_severe, c.failed_missing, c.failed_format);
  if (c.evaluated == 0) {
    err << "eval: no sample could be evaluated\n";
    return 1;
  }
  return 0;
}

struct ReportArgs {
  std::vector<std::string> in;
  std::string out;
  std::string format = "table";
};

int do_report(const ReportArgs& a, std::ostream& out) {
  eval::MetricsReport merged;
  for (const std::string& path : a.in) merged = eval::merge(merged, eval::report_from_json(read_file(path)));
  write_report(merged, a.format, a.out, out);
  return 0;
}

void log_config(const CLI::App& sub, std::ostream& err) {
  json j;
  j["subcommand"] = sub.get_name();
  j["options"] = JsonConfig::describe(sub, true);
  err << "ftp: resolved config " << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flight trajectory prediction toolkit", "ftp"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file (flags override it)");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.fallthrough();

  const auto formats = CLI::IsMember({"table", "csv", "json"});

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic ADS-B corpus");
  synth->add_option("--flights", synth_args.flights, "Number of flights")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_args.seed, "Base seed");
  synth->add_option("--out", synth_args.out, "Output CSV")->required();
  synth->add_option("--manifest", synth_args.manifest, "Manifest path (default <out>.manifest.json)");
  synth->add_option("--from-manifest", synth_args.from_manifest, "Regenerate the corpus described by a manifest");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Clean raw ADS-B records and aggregate them to minutes");
  ingest->add_option("--in", ingest_args.in, "Raw ADS-B CSV")->required();
  ingest->add_option("--out", ingest_args.out, "Minute-aggregated CSV")->required();
  ingest->add_flag("--strict", ingest_args.strict, "Reject malformed rows instead of skipping them");

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Cut continuous windows from aggregated trajectories");
  sample->add_option("--in", sample_args.in, "Aggregated CSV")->required();
  sample->add_option("--out", sample_args.out, "Windows (JSON Lines)")->required();
  sample->add_option("--horizon", sample_args.horizon, "Prediction steps: 1, 4 or 8")->check(CLI::PositiveNumber);
  sample->add_option("--stride", sample_args.stride, "Steps between window starts (0: window size + 1)")
      ->check(CLI::NonNegativeNumber);
  sample->add_flag("--allow-any-horizon", sample_args.allow_any_horizon, "Accept horizons other than 1, 4 and 8");

  PromptArgs prompt_args;
  auto* prompt_cmd = app.add_subcommand("prompt", "Serialize windows into a chat prompt dataset");
  prompt_cmd->add_option("--in", prompt_args.in, "Windows (JSON Lines)")->required();
  prompt_cmd->add_option("--out", prompt_args.out, "Prompt dataset (JSON Lines)")->required();
  auto* with_assistant =
      prompt_cmd->add_flag("--with-assistant", prompt_args.with_assistant, "Include targets (training data)");
  auto* inference = prompt_cmd->add_flag("--inference", prompt_args.inference, "Leave the assistant part empty");
  with_assistant->excludes(inference);

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Produce completions for every window");
  predict->add_option("--backend", predict_args.backend, "endpoint, mock, persistence, kinematic or lstm")
      ->check(CLI::IsMember({"endpoint", "mock", "persistence", "kinematic", "lstm"}));
  predict->add_option("--prompts", predict_args.prompts, "Inference prompt dataset (endpoint, mock)");
  predict->add_option("--windows", predict_args.windows, "Windows (baselines; optional for endpoint, mock)");
  predict->add_option("--out", predict_args.out, "Predictions (JSON Lines)")->required();
  predict->add_option("--mock-behavior", predict_args.mock_behavior, "kinematic, empty, garbled or signflip")
      ->check(CLI::IsMember({"kinematic", "empty", "garbled", "signflip"}));
  predict->add_option("--model", predict_args.lstm_model, "LSTM model file (lstm backend)");
  predict->add_option("--base-url", predict_args.endpoint.base_url, "Endpoint base URL");
  predict->add_option("--endpoint-model", predict_args.endpoint.model, "Model name sent to the endpoint");
  predict->add_option("--temperature", predict_args.endpoint.temperature, "Sampling temperature")
      ->check(CLI::NonNegativeNumber);
  predict->add_option("--max-tokens", predict_args.endpoint.max_tokens, "Maximum output tokens")
      ->check(CLI::PositiveNumber);
  predict->add_option("--timeout", predict_args.endpoint.timeout_seconds, "Request timeout in seconds")
      ->check(CLI::PositiveNumber);
  predict->add_option("--retries", predict_args.endpoint.retries, "Retries after a transport failure")
      ->check(CLI::NonNegativeNumber);
  predict->add_option("--max-in-flight", predict_args.endpoint.max_in_flight, "Concurrent requests")
      ->check(CLI::PositiveNumber);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train-lstm", "Train the LSTM baseline");
  train->add_option("--windows", train_args.windows, "Training windows (JSON Lines)")->required();
  train->add_option("--out", train_args.out, "Model file")->required();
  train->add_option("--epochs", train_args.cfg.epochs)->check(CLI::PositiveNumber);
  train->add_option("--batch-size", train_args.cfg.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--learning-rate", train_args.cfg.learning_rate)->check(CLI::NonNegativeNumber);
  train->add_option("--seed", train_args.cfg.seed);
  train->add_option("--hidden", train_args.cfg.hidden_dim)->check(CLI::PositiveNumber);
  train->add_option("--few-shot", train_args.few_shot, "Fraction of the windows to train on")
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--split-seed", train_args.split_seed, "Seed of the few-shot split");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against the windows' targets");
  eval_cmd->add_option("--windows", eval_args.windows, "Windows (JSON Lines)")->required();
  eval_cmd->add_option("--predictions", eval_args.predictions, "Predictions (JSON Lines)")->required();
  eval_cmd->add_option("--out", eval_args.out, "Report file (default stdout)");
  eval_cmd->add_option("--format", eval_args.format, "table, csv or json")->check(formats);
  eval_cmd->add_option("--few-shot", eval_args.few_shot, "Evaluate a seeded fraction of the samples")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--seed", eval_args.seed, "Seed of the few-shot split");
  eval_cmd->add_flag("--no-latency", eval_args.no_latency, "Leave latency out of the report");
  eval_cmd->add_option("--severe-radius", eval_args.severe_radius, "Severe-deviation radius in degrees")
      ->check(CLI::PositiveNumber);

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Reformat (and merge) stored JSON reports");
  report->add_option("--in", report_args.in, "JSON report; repeat to merge")->required();
  report->add_option("--out", report_args.out, "Output file (default stdout)");
  report->add_option("--format", report_args.format, "table, csv or json")->check(formats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) log_config(*sub, err);
    if (synth->parsed()) return do_synth(synth_args, err);
    if (ingest->parsed()) return do_ingest(ingest_args, err);
    if (sample->parsed()) return do_sample(sample_args, err);
    if (prompt_cmd->parsed()) return do_prompt(prompt_args, err);
    if (predict->parsed()) return do_predict(predict_args, err);
    if (train->parsed()) return do_train(train_args, err);
    if (eval_cmd->parsed()) return do_eval(eval_args, out, err);
    if (report->parsed()) return do_report(report_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"ftp"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ftp::cli
