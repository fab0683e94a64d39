// Runs every primary acceptance criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hrm_corpus.hpp"
#include "oracles.hpp"
#include "shesop/datasets.hpp"
#include "shesop/documents.hpp"
#include "shesop/http_server.hpp"

using namespace shesop;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Verdict()>& fn) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("%s  %-14s %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) {
  if (a == b) return 0;
  return std::fabs(a - b) / std::max(std::fabs(b), 1e-300);
}

// ---- codec

wire::HrmPacket random_packet(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 1), contact(0, 2), reserved(0, 7), u16(0, 65535), count(1, 9);
  wire::HrmPacket p;
  p.flags.hr_16bit = coin(rng);
  p.flags.sensor_contact = static_cast<wire::SensorContact>(contact(rng));
  p.flags.reserved = static_cast<std::uint8_t>(reserved(rng));
  p.heart_rate = static_cast<std::uint16_t>(p.flags.hr_16bit ? u16(rng) : u16(rng) % 256);
  if (coin(rng)) {
    p.flags.energy_present = true;
    p.energy_expended = static_cast<std::uint16_t>(u16(rng));
  }
  if (coin(rng)) {
    p.flags.rr_present = true;
    for (int i = count(rng); i > 0; --i) p.rr_raw.push_back(static_cast<std::uint16_t>(u16(rng)));
  }
  return p;
}

Verdict codec() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  int round_trip_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto p = random_packet(rng);
    if (!(wire::decode_packet(wire::encode_packet(p)) == p)) ++round_trip_bad;
  }
  int vectors = 0, vector_bad = 0;
  for (const auto& hex : corpus::hex_files(SHESOP_VECTORS_DIR)) {
    ++vectors;
    if (corpus::decoded_fields(corpus::read_hex(hex)) != corpus::read_fields(corpus::fields_path(hex))) ++vector_bad;
  }
  std::uniform_int_distribution<int> len(0, 40), octet(0, 255);
  long fuzz_bad = 0, accepted = 0;
  std::vector<std::uint8_t> b;
  for (int i = 0; i < 1000000; ++i) {
    b.resize(static_cast<std::size_t>(len(rng)));
    for (auto& x : b) x = static_cast<std::uint8_t>(octet(rng));
    const auto r = wire::try_decode_packet(b);
    if (r.packet.has_value() == r.error.has_value()) ++fuzz_bad;
    if (r.packet) {
      ++accepted;
      if (r.packet->encoded_size() != b.size()) ++fuzz_bad;
    }
  }
  const double secs = seconds_since(t0);
  return {round_trip_bad == 0 && vector_bad == 0 && vectors >= 10 && fuzz_bad == 0 && secs < 30,
          fmt("10^4 round-trips: %d mismatches; %d vectors: %d mismatches; 10^6 fuzz: %ld anomalies, %ld accepted; "
              "%.1f s < 30 s",
              round_trip_bad, vectors, vector_bad, fuzz_bad, accepted, secs)};
}

// ---- HRV

std::vector<std::vector<double>> random_series(std::uint64_t seed, int count, std::size_t lo, std::size_t hi) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n(lo, hi);
  std::uniform_real_distribution<double> u(550, 1150);
  std::vector<std::vector<double>> out;
  for (int k = 0; k < count; ++k) {
    std::vector<double> rr(n(rng));
    for (auto& v : rr) v = u(rng);
    out.push_back(std::move(rr));
  }
  return out;
}

Verdict time_domain() {
  double worst = 0;
  for (const auto& rr : random_series(11, 100, 10, 500)) {
    const auto got = hrv::time_domain(series_from_rr(rr));
    const auto want = oracle::time_domain(rr);
    for (auto [a, b] : {std::pair{got.mean_rr_ms, want.mean_rr}, {got.sdnn_ms, want.sdnn}, {got.rmssd_ms, want.rmssd},
                        {got.pnn50_pct, want.pnn50}}) {
      worst = std::max(worst, rel(a, b));
    }
  }
  return {worst <= 1e-9, fmt("100 series, N in [10,500]: max relative error %.2e <= 1e-9", worst)};
}

double literal_rmssd_gap = 0;

Verdict poincare() {
  double worst = 0;
  for (const auto& rr : random_series(11, 100, 10, 500)) {
    const auto p = hrv::poincare(series_from_rr(rr));
    worst = std::max(worst, rel(p.sd1_ms, oracle::sdsd_population(rr) / std::numbers::sqrt2));
    worst = std::max(worst, rel(p.sd1_ms, oracle::poincare_sd1(rr)));
    literal_rmssd_gap = std::max(literal_rmssd_gap, rel(p.sd1_ms, oracle::time_domain(rr).rmssd / std::numbers::sqrt2));
  }
  bool constant_zero = true;
  for (std::size_t n : {3u, 10u, 300u}) {
    const auto p = hrv::poincare(series_from_rr(std::vector<double>(n, 812.5)));
    constant_zero = constant_zero && p.sd1_ms == 0.0 && p.sd2_ms == 0.0 && !p.sd1_sd2;
  }
  return {worst <= 1e-9 && constant_zero,
          fmt("sd1 = population SD of successive differences / sqrt2: max relative error %.2e <= 1e-9; constant "
              "series sd1=sd2=0 exactly: %s",
              worst, constant_zero ? "yes" : "no")};
}

Verdict sampen() {
  int mismatches = 0;
  std::uint64_t total_b = 0;
  for (const auto& rr : random_series(12, 50, 10, 200)) {
    const auto s = series_from_rr(rr);
    const double r = std::max(0.2 * hrv::time_domain(s).sdnn_ms, 1.0);
    const auto got = hrv::sample_entropy(s, 2, r);
    const auto want = oracle::sampen_counts(rr, 2, r);
    if (got.matches_m != want.B || got.matches_m_plus_1 != want.A) ++mismatches;
    total_b += want.B;
  }
  return {mismatches == 0, fmt("50 series, N <= 200, m=2: %d count mismatches (%llu B pairs checked)", mismatches,
                               static_cast<unsigned long long>(total_b))};
}

RrSeries modulated(double seconds, double f0, double amp) {
  std::vector<double> rr;
  double t = 0;
  for (;;) {
    const double v = 1000 + amp * std::sin(2 * std::numbers::pi * f0 * t);
    if (t + v / 1000 > seconds) break;
    rr.push_back(v);
    t += v / 1000;
  }
  return series_from_rr(rr);
}

Verdict spectral() {
  bool ok = true;
  std::string detail;
  const auto grid = hrv::default_grid();
  const double step = grid[1] - grid[0];
  for (double f0 : {0.1, 0.25}) {
    const auto s = modulated(300, f0, 50);
    const auto psd = hrv::lomb_scargle_psd(s, grid);
    const auto peak = static_cast<std::size_t>(std::max_element(psd.power.begin(), psd.power.end()) - psd.power.begin());
    const double off = std::fabs(psd.freq_hz[peak] - f0);
    const auto fd = hrv::band_powers(psd);
    const double target = f0 < hrv::kLfBand.hi_hz ? fd.lf_power_ms2 : fd.hf_power_ms2;
    const auto rr = s.rr_values();
    const double var = static_cast<double>(oracle::population_variance({rr.begin(), rr.end()}));
    const double share = target / fd.total_power_ms2;
    const double total_err = std::fabs(fd.total_power_ms2 - var) / var;
    ok = ok && off <= step && share >= 0.8 && total_err <= 0.10;
    detail += fmt("%s%.2f Hz: argmax off %.4f Hz (step %.4f), band share %.1f%% >= 80%%, total vs variance %.1f%% <= 10%%",
                  detail.empty() ? "" : "; ", f0, off, step, 100 * share, 100 * total_err);
  }
  return {ok, detail};
}

// ---- SVM

Verdict svm_criterion() {
  const auto t0 = Clock::now();
  // XOR
  std::vector<svm::Sample> xor_data;
  for (auto [a, b, y] : {std::tuple{0., 0., -1}, {1., 1., -1}, {0., 1., 1}, {1., 0., 1}}) {
    xor_data.push_back({{{"x1", "x2"}, {a, b}}, y});
  }
  svm::TrainConfig xc;
  xc.C = 10;
  xc.kernel = svm::Kernel::rbf(1.0);
  svm::TrainReport xr;
  const auto xm = svm::train_smo(xor_data, xc, &xr);
  int xor_hits = 0;
  for (const auto& s : xor_data) xor_hits += svm::predict(xm, s.x).positive == (s.label > 0);

  // rest/stress, 100/100, 50 held out
  datasets::DatasetConfig dc;
  dc.per_profile = 100;
  const auto table = datasets::generate_dataset(dc);
  auto samples = datasets::to_samples(table, {"stress"});
  std::mt19937_64 rng(5);
  std::shuffle(samples.begin(), samples.end(), rng);
  const std::vector<svm::Sample> holdout(samples.begin(), samples.begin() + 50);
  const std::vector<svm::Sample> train(samples.begin() + 50, samples.end());
  svm::TrainConfig tc;
  tc.seed = 7;
  svm::TrainReport tr;
  const auto model = svm::train_smo(train, tc, &tr);
  int hits = 0;
  for (const auto& s : holdout) hits += svm::predict(model, s.x).positive == (s.label > 0);

  const double n = static_cast<double>(train.size());
  const bool kkt = std::fabs(tr.sum_alpha_y) <= tc.tol * n && tr.max_kkt_residual <= tc.tol &&
                   std::fabs(xr.sum_alpha_y) <= xc.tol * 4 && xr.max_kkt_residual <= xc.tol;
  const double secs = seconds_since(t0);
  return {kkt && xor_hits == 4 && hits >= 45 && secs < 10,
          fmt("|sum a*y| %.1e <= %.1e, max KKT residual %.1e <= %.0e; XOR %d/4; holdout %d/50 = %.0f%% >= 90%%; "
              "%.1f s < 10 s",
              std::fabs(tr.sum_alpha_y), tc.tol * n, std::max(tr.max_kkt_residual, xr.max_kkt_residual), tc.tol,
              xor_hits, hits, 2.0 * hits, secs)};
}

// ---- sessions

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

service::ServiceOptions service_options(const datasets::ReferenceModels& m) {
  service::ServiceOptions o;
  o.engine.analyzers.stress_model = std::make_shared<const svm::SvmModel>(m.stress);
  o.engine.analyzers.flu_model = std::make_shared<const svm::SvmModel>(m.influenza);
  return o;
}

bool wait_until(const std::function<bool()>& pred, milliseconds limit) {
  const auto end = Clock::now() + limit;
  while (Clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(milliseconds(10));
  }
  return false;
}

Verdict session_gate(const datasets::ReferenceModels& models) {
  TempDir dir("shesop-acceptance-gate");
  save_rr_csv((dir.path / "short.csv").string(),
              series_from_rr(sources::synthetic_rr(sources::SyntheticProfile::preset(sources::ProfileKind::rest), 9, 200)));
  struct Case {
    std::string name;
    sources::SourceDescriptor source;
    session::SessionState want;
    std::string id;
  };
  std::vector<Case> cases{
      {"607 s", sources::SourceDescriptor::synthetic(sources::ProfileKind::rest, 607, 607, 100), session::SessionState::Completed, {}},
      {"1202 s", sources::SourceDescriptor::synthetic(sources::ProfileKind::stress, 1202, 1202, 100), session::SessionState::Completed, {}},
      {"200 s", sources::SourceDescriptor::replay(dir.path / "short.csv", 100), session::SessionState::InsufficientData, {}},
  };
  const auto t0 = Clock::now();
  service::SessionService svc(service_options(models));
  for (auto& c : cases) {
    c.id = svc.create({"acceptance", 35, session::Sex::unspecified, ""});
    svc.attach(c.id, c.source);
  }
  bool ok = true;
  std::string detail;
  for (auto& c : cases) {
    const bool done = wait_until([&] { return svc.source_exhausted(c.id); }, milliseconds(50000));
    const auto r = svc.stop(c.id);
    const bool populated = r.state != session::SessionState::Completed || (r.report && r.verdicts);
    ok = ok && done && r.state == c.want && populated;
    detail += fmt("%s%s -> %s (%.1f s recorded%s)", detail.empty() ? "" : "; ", c.name.c_str(),
                  std::string(session::to_string(r.state)).c_str(), r.duration_s,
                  r.verdicts ? (r.verdicts->stress.positive ? ", stressed" : ", not stressed") : "");
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60, detail + fmt("; wall %.1f s < 60 s", secs)};
}

// ---- CLI

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Verdict cli_pipeline() {
  const std::vector<std::string> steps{
      "simulate --profile stress --duration 607 --seed 1 --out rr.csv",
      "analyze rr.csv --out report.json",
      "dataset --profiles rest,stress --per-profile 40 --seed 7 --out stress.csv",
      "train --data stress.csv --positive stress --out stress.model.json",
      "dataset --profiles rest,stress,influenza --per-profile 40 --seed 7 --out flu.csv",
      "train --data flu.csv --positive influenza --negative-label no_influenza --positive-label influenza --out "
      "flu.model.json",
      "classify --stress-model stress.model.json --flu-model flu.model.json --report report.json --out verdicts.json",
  };
  std::vector<std::string> runs;
  std::string failed;
  for (int pass = 0; pass < 2; ++pass) {
    TempDir dir("shesop-acceptance-cli-" + std::to_string(pass));
    for (const auto& s : steps) {
      const std::string cmd = "cd '" + dir.path.string() + "' && '" SHESOP_CLI_PATH "' " + s + " 2>/dev/null";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        failed = s;
        break;
      }
    }
    std::string all;
    for (const char* f : {"rr.csv", "report.json", "stress.model.json", "flu.model.json", "verdicts.json"}) {
      all += slurp(dir.path / f);
    }
    runs.push_back(all);
    if (pass == 0) runs.push_back(slurp(dir.path / "verdicts.json"));
  }
  bool verdict_doc = false;
  std::string verdict;
  try {
    const auto v = json::parse(runs[1]);
    verdict_doc = v.at("schema") == 1 && v.at("stress").contains("positive") && v.at("influenza").contains("positive");
    verdict = fmt("stress=%s influenza=%s", v["stress"]["label"].get<std::string>().c_str(),
                  v["influenza"]["label"].get<std::string>().c_str());
  } catch (const std::exception&) {
  }
  const bool same = runs[0] == runs[2];
  return {failed.empty() && verdict_doc && same,
          (failed.empty() ? std::string("all steps exit 0") : "failed: " + failed) + "; verdicts " +
              (verdict_doc ? verdict : "missing") + "; two runs byte-identical: " + (same ? "yes" : "no")};
}

// ---- service

// A client that requests the live stream and never reads from its socket.
int stalled_http_client(int port, const std::string& id) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  int small = 1024;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &small, sizeof small);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    return -1;
  }
  const std::string req = "GET /sessions/" + id + "/live HTTP/1.1\r\nHost: 127.0.0.1\r\n\r\n";
  if (::send(fd, req.data(), req.size(), 0) < 0) {
    ::close(fd);
    return -1;
  }
  return fd;
}

Verdict service_flow(const datasets::ReferenceModels& models) {
  const auto src = sources::SourceDescriptor::synthetic(sources::ProfileKind::stress, 77, 400, 200);
  service::SessionService svc(service_options(models));
  service::HttpServer server(svc);
  const int port = server.start({"127.0.0.1", 0});
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);

  const json subject{{"pseudonym", "acceptance"}, {"age", 35}};

  // create -> attach -> live -> stop, compared with a direct engine feed
  auto r = client.Post("/sessions", subject.dump(), "application/json");
  const std::string id = json::parse(r->body).at("session_id");
  std::vector<std::uint64_t> seqs;
  std::thread live([&] {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    std::string buf;
    c.Get("/sessions/" + id + "/live", [&](const char* data, std::size_t n) {
      buf.append(data, n);
      for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n')) {
        seqs.push_back(json::parse(buf.substr(0, nl)).at("seq"));
        buf.erase(0, nl + 1);
      }
      return true;
    });
  });
  std::this_thread::sleep_for(milliseconds(100));
  const auto t_plain = Clock::now();
  client.Post("/sessions/" + id + "/attach", documents::source_to_document(src), "application/json");
  wait_until([&] { return svc.source_exhausted(id); }, milliseconds(30000));
  const double plain_s = seconds_since(t_plain);
  r = client.Post("/sessions/" + id + "/stop", "{}", "application/json");
  live.join();
  const auto summary = json::parse(r->body);

  session::SessionEngine direct(service_options(models).engine);
  const auto did = direct.create_session({"acceptance", 35, session::Sex::unspecified, ""});
  direct.attach_source(did, src);
  auto stream = sources::open_stream(src);
  while (auto n = stream->next()) direct.on_packet(did, wire::decode_packet(n->payload), n->at_s);
  auto want = json::parse(documents::record_summary_document(direct.stop(did)));
  auto got = summary;
  got.erase("session_id");
  want.erase("session_id");
  const bool matches = got == want;

  bool increasing = !seqs.empty();
  for (std::size_t i = 1; i < seqs.size(); ++i) increasing = increasing && seqs[i] > seqs[i - 1];

  // the same source with a stalled in-process subscriber and a stalled HTTP client
  r = client.Post("/sessions", subject.dump(), "application/json");
  const std::string id2 = json::parse(r->body).at("session_id");
  auto stalled = svc.subscribe(id2);
  const int fd = stalled_http_client(port, id2);
  std::this_thread::sleep_for(milliseconds(100));
  const auto t_stalled = Clock::now();
  client.Post("/sessions/" + id2 + "/attach", documents::source_to_document(src), "application/json");
  wait_until([&] { return svc.source_exhausted(id2); }, milliseconds(30000));
  const double stalled_s = seconds_since(t_stalled);
  const bool dropped = stalled->dropped();
  client.Post("/sessions/" + id2 + "/stop", "{}", "application/json");
  if (fd >= 0) ::close(fd);
  server.stop();

  const double ratio = stalled_s / plain_s;
  return {matches && increasing && ratio <= 2.0 && fd >= 0,
          fmt("HTTP summary equals engine outcome: %s (%s); %zu events, seq strictly increasing: %s; ingestion "
              "%.2f s vs %.2f s with stalled subscribers = %.2fx <= 2x (slow subscriber disconnected: %s)",
              matches ? "yes" : "no", summary.value("state", "?").c_str(), seqs.size(), increasing ? "yes" : "no",
              stalled_s, plain_s, ratio, dropped ? "yes" : "no")};
}

}  // namespace

int main() {
  criterion("codec", codec);
  criterion("time-domain", time_domain);
  criterion("poincare", poincare);
  std::printf("note  poincare       literal rmssd/sqrt2 reading differs by up to %.2e relative (see decisions)\n",
              literal_rmssd_gap);
  criterion("sampen", sampen);
  criterion("spectral", spectral);
  criterion("svm", svm_criterion);
  const auto models = datasets::train_reference_models();
  criterion("session-gate", [&] { return session_gate(models); });
  criterion("cli", cli_pipeline);
  criterion("service", [&] { return service_flow(models); });
  std::printf("%d failed\n", failures);
  return failures;
}
