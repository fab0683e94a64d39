// shesop: batch and operational entry points.
//
// Exit codes: 0 success (InsufficientData included), 1 usage, 2 data,
// 3 analysis, 4 network.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "shesop/datasets.hpp"
#include "shesop/documents.hpp"
#include "shesop/error.hpp"
#include "shesop/http_server.hpp"
#include "shesop/persistence.hpp"
#include "shesop/service.hpp"
#include "shesop/session.hpp"
#include "shesop/sources.hpp"

namespace {

using namespace shesop;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
  out << text << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + out_path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

svm::SvmModel load_model(const std::string& path) { return documents::model_from_document(slurp(path)); }

struct ModelPaths {
  std::string stress;
  std::string flu;
};

void add_model_flags(CLI::App* cmd, ModelPaths& paths) {
  cmd->add_option("--stress-model", paths.stress, "Stress model document (default: train the reference models)");
  cmd->add_option("--flu-model", paths.flu, "Influenza model document (default: train the reference models)");
}

session::Analyzers load_analyzers(const ModelPaths& paths) {
  session::Analyzers a;
  if (!paths.stress.empty() && !paths.flu.empty()) {
    a.stress_model = std::make_shared<const svm::SvmModel>(load_model(paths.stress));
    a.flu_model = std::make_shared<const svm::SvmModel>(load_model(paths.flu));
    return a;
  }
  if (!paths.stress.empty() || !paths.flu.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--stress-model and --flu-model go together");
  }
  std::cerr << "no models given; training the NON-CLINICAL reference models\n";
  auto models = datasets::train_reference_models();
  a.stress_model = std::make_shared<const svm::SvmModel>(std::move(models.stress));
  a.flu_model = std::make_shared<const svm::SvmModel>(std::move(models.influenza));
  return a;
}

// ---- simulate

struct SimulateArgs {
  std::string profile = "rest";
  double duration_s = 607.0;
  std::uint64_t seed = 42;
  std::string out;
};

int run_simulate(const SimulateArgs& args) {
  auto desc = sources::SourceDescriptor::synthetic(sources::profile_from_string(args.profile), args.seed,
                                                   args.duration_s);
  auto stream = sources::synthetic_stream(desc);
  const auto packets = sources::drain(*stream);
  const auto series = accumulate(packets, desc.name);
  std::ostringstream csv;
  write_rr_csv(csv, series);
  std::string text = csv.str();
  text.pop_back();
  emit(text, args.out);
  std::cerr << series.size() << " beats, " << format_double(series.empty() ? 0.0 : series.beats.back().t_s)
            << " s\n";
  return 0;
}

// ---- analyze

struct AnalyzeArgs {
  std::string input;
  std::string out;
  std::size_t min_beats = 60;
};

int run_analyze(const AnalyzeArgs& args) {
  const auto series = load_rr_csv(args.input);
  hrv::ReportConfig cfg;
  cfg.min_beats = args.min_beats;
  if (series.size() < std::max<std::size_t>(cfg.min_beats, 4)) {
    throw Error(ErrorCode::TooFewBeats, std::to_string(series.size()) + " beats in " + args.input);
  }
  const auto cleaned = filter_ectopic(series);
  if (cleaned.removed_count > 0) std::cerr << cleaned.removed_count << " ectopic beats removed\n";
  emit(documents::report_to_document(hrv::compute_report(cleaned.series, cfg)), args.out);
  return 0;
}

// ---- dataset

struct DatasetArgs {
  std::vector<std::string> profiles{"rest", "stress"};
  std::size_t per_profile = 100;
  std::uint64_t seed = 7;
  double duration_s = 300.0;
  std::string out;
};

int run_dataset(const DatasetArgs& args) {
  datasets::DatasetConfig cfg;
  cfg.profiles.clear();
  for (const auto& p : args.profiles) cfg.profiles.push_back(sources::profile_from_string(p));
  cfg.per_profile = args.per_profile;
  cfg.seed = args.seed;
  cfg.duration_s = args.duration_s;
  const auto table = datasets::generate_dataset(cfg);
  std::ostringstream csv;
  datasets::write_features_csv(csv, table);
  std::string text = csv.str();
  text.pop_back();
  emit(text, args.out);
  return 0;
}

// ---- train

struct TrainArgs {
  std::string data;
  std::vector<std::string> positive{"stress"};
  std::string kernel = "rbf";
  double gamma = 0.0;
  double C = 1.0;
  double tol = 1e-3;
  int max_passes = 10;
  std::uint64_t seed = 0;
  std::string negative_label = "not_stressed";
  std::string positive_label = "stressed";
  std::string out;
};

int run_train(const TrainArgs& args) {
  const auto table = datasets::load_features_csv(args.data);
  svm::TrainConfig cfg;
  cfg.C = args.C;
  cfg.tol = args.tol;
  cfg.max_passes = args.max_passes;
  cfg.seed = args.seed;
  cfg.negative_label = args.negative_label;
  cfg.positive_label = args.positive_label;
  if (args.kernel == "linear") {
    cfg.kernel = svm::Kernel::linear();
  } else if (args.gamma > 0.0) {
    cfg.kernel = svm::Kernel::rbf(args.gamma);
  }
  svm::TrainReport report;
  const auto model = svm::train_smo(datasets::to_samples(table, args.positive), cfg, &report);
  std::cerr << table.rows.size() << " samples, " << model.support_vectors.size() << " support vectors, "
            << report.sweeps << " sweeps, max KKT residual " << report.max_kkt_residual << '\n';
  if (!model.converged) std::cerr << "warning: DidNotConverge, model flagged\n";
  emit(documents::model_to_document(model), args.out);
  return 0;
}

// ---- classify

struct ClassifyArgs {
  std::string stress_model;
  std::string flu_model;
  std::string report;
  std::string out;
};

int run_classify(const ClassifyArgs& args) {
  const auto report = documents::report_from_document(slurp(args.report));
  const auto verdicts =
      svm::classify_condition(report, load_model(args.stress_model), load_model(args.flu_model));
  emit(documents::verdicts_to_document(verdicts), args.out);
  return 0;
}

// ---- record

struct RecordArgs {
  std::string source;
  double speed = 1.0;
  double min_duration_s = 300.0;
  double max_duration_s = 3600.0;
  std::string subject = "anonymous";
  int age = 30;
  std::string sex = "unspecified";
  std::uint64_t seed = 42;
  double duration_s = 607.0;
  std::string store;
  std::string out;
  ModelPaths models;
};

int run_record(const RecordArgs& args) {
  auto source = sources::parse_source_spec(args.source);
  source.speed = args.speed;
  if (source.kind == sources::SourceKind::synthetic) {
    source.seed = args.seed;
    source.duration_s = args.duration_s;
  }
  source.validate();

  session::SubjectEntry subject;
  subject.pseudonym = args.subject;
  subject.age = args.age;
  subject.sex = session::sex_from_string(args.sex);
  session::SessionConfig config;
  config.min_duration_s = args.min_duration_s;
  config.max_duration_s = args.max_duration_s;

  service::ServiceOptions opts;
  opts.engine.analyzers = load_analyzers(args.models);
  if (!args.store.empty()) opts.engine.store = std::make_shared<persistence::SessionStore>(args.store);
  service::SessionService svc(std::move(opts));

  const auto id = svc.create(subject, config);
  svc.attach(id, source);
  while (!svc.source_exhausted(id) && !session::is_terminal(svc.engine().state(id))) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  const auto record = session::is_terminal(svc.engine().state(id)) ? svc.record(id) : svc.stop(id);
  std::cerr << record.session_id << ": " << session::to_string(record.state);
  if (!record.status_detail.empty()) std::cerr << " (" << record.status_detail << ")";
  std::cerr << '\n';
  emit(persistence::session_document(record, record.started_at), args.out);
  return record.state == session::SessionState::Failed ? 3 : 0;
}

// ---- serve

struct ServeArgs {
  std::string bind;
  std::string replay_dir;
  std::string store;
  std::string cors_origin = "*";
  std::size_t max_sessions = 16;
  ModelPaths models;
};

std::atomic<bool> g_stop{false};

int run_serve(const ServeArgs& args) {
  const auto address = args.bind.empty() ? service::BindAddress::from_env() : service::BindAddress::parse(args.bind);
  service::ServiceOptions opts;
  opts.engine.analyzers = load_analyzers(args.models);
  opts.engine.max_active = args.max_sessions;
  if (!args.store.empty()) opts.engine.store = std::make_shared<persistence::SessionStore>(args.store);
  if (!args.replay_dir.empty()) opts.sources.replay_dir = args.replay_dir;
  opts.upload = persistence::UploadTarget::from_env();
  service::SessionService svc(std::move(opts));
  service::HttpServer server(svc, args.cors_origin);
  const int port = server.start(address);
  std::cerr << "listening on " << address.host << ':' << port << '\n';

  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int exit_code(const Error& e) { return static_cast<int>(classify(e.code())); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shesop: heart-rate variability recording, analysis and NON-CLINICAL classification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic RR recording as t_s,rr_ms CSV");
  simulate->add_option("--profile", sim.profile, "rest, stress or influenza")
      ->check(CLI::IsMember({"rest", "stress", "influenza"}))
      ->capture_default_str();
  simulate->add_option("--duration", sim.duration_s, "Recording length in seconds")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Generator seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output file (default: stdout)");

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Clean an RR CSV and emit its HRV report document");
  analyze->add_option("input", ana.input, "RR CSV file")->required();
  analyze->add_option("--out", ana.out, "Output file (default: stdout)");
  analyze->add_option("--min-beats", ana.min_beats, "Minimum clean beats for a report")->capture_default_str();

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("dataset", "Generate a synthetic labelled feature CSV");
  dataset->add_option("--profiles", ds.profiles, "Profiles to sample, one label each")
      ->check(CLI::IsMember({"rest", "stress", "influenza"}))
      ->delimiter(',')
      ->capture_default_str();
  dataset->add_option("--per-profile", ds.per_profile, "Samples per profile")->capture_default_str();
  dataset->add_option("--seed", ds.seed, "Base seed; every sample gets a distinct derived seed")
      ->capture_default_str();
  dataset->add_option("--duration", ds.duration_s, "Seconds per simulated recording")->capture_default_str();
  dataset->add_option("--out", ds.out, "Output file (default: stdout)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a binary SVM on a feature CSV");
  train->add_option("--data", tr.data, "Feature CSV with header label,<features>")->required();
  train->add_option("--positive", tr.positive, "Labels of the positive class")->delimiter(',')->capture_default_str();
  train->add_option("--kernel", tr.kernel, "rbf or linear")
      ->check(CLI::IsMember({"rbf", "linear"}))
      ->capture_default_str();
  train->add_option("--gamma", tr.gamma, "rbf gamma (default: 1 / number of features)");
  train->add_option("--C", tr.C, "Box constraint")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--tol", tr.tol, "KKT tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--max-passes", tr.max_passes, "Sweeps without change before stopping")->capture_default_str();
  train->add_option("--seed", tr.seed, "Seed of the second-index choice")->capture_default_str();
  train->add_option("--negative-label", tr.negative_label, "Name of the negative class")->capture_default_str();
  train->add_option("--positive-label", tr.positive_label, "Name of the positive class")->capture_default_str();
  train->add_option("--out", tr.out, "Output file (default: stdout)");

  ClassifyArgs cl;
  auto* classify_cmd = app.add_subcommand("classify", "Apply the stress and influenza models to a report");
  classify_cmd->add_option("--stress-model", cl.stress_model, "Stress model document")->required();
  classify_cmd->add_option("--flu-model", cl.flu_model, "Influenza model document")->required();
  classify_cmd->add_option("--report", cl.report, "HRV report document")->required();
  classify_cmd->add_option("--out", cl.out, "Output file (default: stdout)");

  RecordArgs rec;
  auto* record = app.add_subcommand("record", "Run one session against a replay or synthetic source");
  record->add_option("--source", rec.source, "replay:FILE or synthetic:PROFILE")->required();
  record->add_option("--speed", rec.speed, "Pacing factor")->check(CLI::PositiveNumber)->capture_default_str();
  record->add_option("--min-duration", rec.min_duration_s, "Seconds required for analysis")->capture_default_str();
  record->add_option("--max-duration", rec.max_duration_s, "Session is finished after this many seconds")
      ->capture_default_str();
  record->add_option("--subject", rec.subject, "Subject pseudonym")->capture_default_str();
  record->add_option("--age", rec.age, "Subject age in years")->capture_default_str();
  record->add_option("--sex", rec.sex, "female, male or unspecified")
      ->check(CLI::IsMember({"female", "male", "unspecified"}))
      ->capture_default_str();
  record->add_option("--seed", rec.seed, "Seed of a synthetic source")->capture_default_str();
  record->add_option("--duration", rec.duration_s, "Length of a synthetic source in seconds")->capture_default_str();
  record->add_option("--store", rec.store, "Directory to persist the session in");
  record->add_option("--out", rec.out, "Output file (default: stdout)");
  add_model_flags(record, rec.models);

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--bind", srv.bind, "host:port (default: SHESOP_BIND or 127.0.0.1:8080)");
  serve->add_option("--replay-dir", srv.replay_dir, "Directory of RR CSV files offered as devices");
  serve->add_option("--store", srv.store, "Directory to persist sessions in");
  serve->add_option("--cors-origin", srv.cors_origin, "Access-Control-Allow-Origin value")->capture_default_str();
  serve->add_option("--max-sessions", srv.max_sessions, "Concurrent recording sessions")->capture_default_str();
  add_model_flags(serve, srv.models);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*analyze) return run_analyze(ana);
    if (*dataset) return run_dataset(ds);
    if (*train) return run_train(tr);
    if (*classify_cmd) return run_classify(cl);
    if (*record) return run_record(rec);
    if (*serve) return run_serve(srv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
