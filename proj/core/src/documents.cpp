#include "shesop/documents.hpp"

#include <json.hpp>

#include "shesop/error.hpp"

namespace shesop::documents {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json parse_or(std::string_view text, ErrorCode code) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(code, e.what());
  }
}

void require_schema(const json& j) {
  if (!j.is_object() || !j.contains("schema") || !j.at("schema").is_number_integer()) {
    throw Error(ErrorCode::SchemaMismatch, "missing integer schema field");
  }
  const auto v = j.at("schema").get<std::int64_t>();
  if (v != kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch,
                "document schema " + std::to_string(v) + ", reader supports " + std::to_string(kSchemaVersion));
  }
}

json report_json(const hrv::HrvReport& r) {
  return json{
      {"schema", kSchemaVersion},
      {"kind", "hrv_report"},
      {"window_start_s", r.window.start_s},
      {"window_end_s", r.window.end_s},
      {"beat_count", r.window.beat_count},
      {"mean_rr_ms", r.time.mean_rr_ms},
      {"sdnn_ms", r.time.sdnn_ms},
      {"sdnn_convention", "sample"},
      {"rmssd_ms", r.time.rmssd_ms},
      {"pnn50_pct", r.time.pnn50_pct},
      {"mean_hr_bpm", r.time.mean_hr_bpm},
      {"vlf_power_ms2", r.freq.vlf_power_ms2},
      {"lf_power_ms2", r.freq.lf_power_ms2},
      {"hf_power_ms2", r.freq.hf_power_ms2},
      {"total_power_ms2", r.freq.total_power_ms2},
      {"lf_hf", opt(r.freq.lf_hf)},
      {"lf_nu", opt(r.freq.lf_nu)},
      {"hf_nu", opt(r.freq.hf_nu)},
      {"sd1_ms", r.poincare.sd1_ms},
      {"sd2_ms", r.poincare.sd2_ms},
      {"sd1_sd2", opt(r.poincare.sd1_sd2)},
      {"poincare_convention", "population"},
      {"sampen", opt(r.nonlinear.sampen)},
      {"sampen_m", r.nonlinear.m},
      {"sampen_r_ms", r.nonlinear.r_ms},
      {"sampen_matches_m", r.nonlinear.matches_m},
      {"sampen_matches_m1", r.nonlinear.matches_m_plus_1},
  };
}

hrv::HrvReport report_from_json(const json& j) {
  require_schema(j);
  hrv::HrvReport r;
  r.window.start_s = j.at("window_start_s").get<double>();
  r.window.end_s = j.at("window_end_s").get<double>();
  r.window.beat_count = j.at("beat_count").get<std::size_t>();
  r.time.mean_rr_ms = j.at("mean_rr_ms").get<double>();
  r.time.sdnn_ms = j.at("sdnn_ms").get<double>();
  r.time.rmssd_ms = j.at("rmssd_ms").get<double>();
  r.time.pnn50_pct = j.at("pnn50_pct").get<double>();
  r.time.mean_hr_bpm = j.at("mean_hr_bpm").get<double>();
  r.freq.vlf_power_ms2 = j.at("vlf_power_ms2").get<double>();
  r.freq.lf_power_ms2 = j.at("lf_power_ms2").get<double>();
  r.freq.hf_power_ms2 = j.at("hf_power_ms2").get<double>();
  r.freq.total_power_ms2 = j.at("total_power_ms2").get<double>();
  r.freq.lf_hf = opt_double(j, "lf_hf");
  r.freq.lf_nu = opt_double(j, "lf_nu");
  r.freq.hf_nu = opt_double(j, "hf_nu");
  r.poincare.sd1_ms = j.at("sd1_ms").get<double>();
  r.poincare.sd2_ms = j.at("sd2_ms").get<double>();
  r.poincare.sd1_sd2 = opt_double(j, "sd1_sd2");
  r.nonlinear.sampen = opt_double(j, "sampen");
  r.nonlinear.m = j.at("sampen_m").get<int>();
  r.nonlinear.r_ms = j.at("sampen_r_ms").get<double>();
  r.nonlinear.matches_m = j.at("sampen_matches_m").get<std::uint64_t>();
  r.nonlinear.matches_m_plus_1 = j.at("sampen_matches_m1").get<std::uint64_t>();
  return r;
}

json prediction_json(const svm::Prediction& p) {
  return json{{"label", p.label}, {"score", p.score}, {"positive", p.positive}};
}

svm::Prediction prediction_from_json(const json& j) {
  svm::Prediction p;
  p.label = j.at("label").get<std::string>();
  p.score = j.at("score").get<double>();
  p.positive = j.at("positive").get<bool>();
  return p;
}

json verdicts_json(const svm::ConditionResult& v) {
  return json{{"stress", prediction_json(v.stress)}, {"influenza", prediction_json(v.influenza)}};
}

json series_json(const RrSeries& s) {
  json t = json::array(), rr = json::array();
  for (const auto& b : s.beats) {
    t.push_back(b.t_s);
    rr.push_back(b.rr_ms);
  }
  return json{{"source_id", s.source_id}, {"t_s", std::move(t)}, {"rr_ms", std::move(rr)}};
}

RrSeries series_from_json(const json& j) {
  RrSeries s;
  s.source_id = j.at("source_id").get<std::string>();
  const auto& t = j.at("t_s");
  const auto& rr = j.at("rr_ms");
  if (t.size() != rr.size()) throw Error(ErrorCode::Corrupt, "t_s and rr_ms lengths differ");
  s.beats.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) s.beats.push_back({t[i].get<double>(), rr[i].get<double>()});
  return s;
}

json source_json(const sources::SourceDescriptor& d) {
  json j{{"kind", sources::to_string(d.kind)}, {"name", d.name}, {"speed", d.speed}};
  if (d.kind == sources::SourceKind::replay) {
    j["path"] = d.path.string();
  } else {
    j["profile"] = sources::to_string(d.profile);
    j["seed"] = d.seed;
    j["duration_s"] = d.duration_s;
    j["notify_interval_s"] = d.notify_interval_s;
  }
  return j;
}

sources::SourceDescriptor source_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "source must be an object");
  sources::SourceDescriptor d;
  if (j.contains("name")) {
    d = sources::parse_source_spec(j.at("name").get<std::string>());
  } else if (j.contains("kind") && j.at("kind") == "replay" && j.contains("path")) {
    d = sources::SourceDescriptor::replay(j.at("path").get<std::string>());
  } else if (j.contains("kind") && j.at("kind") == "synthetic" && j.contains("profile")) {
    d = sources::SourceDescriptor::synthetic(
        sources::profile_from_string(j.at("profile").get<std::string>()), 42, 607.0);
  } else {
    throw Error(ErrorCode::SourceUnavailable, "source needs a name or kind with path/profile");
  }
  if (j.contains("speed")) d.speed = j.at("speed").get<double>();
  if (d.kind == sources::SourceKind::replay) {
    if (j.contains("path")) {
      d.path = j.at("path").get<std::string>();
      d.name = "replay:" + d.path.string();
    }
  } else {
    if (j.contains("profile")) {
      d.profile = sources::profile_from_string(j.at("profile").get<std::string>());
      d.name = "synthetic:" + std::string(sources::to_string(d.profile));
    }
    if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("duration_s")) d.duration_s = j.at("duration_s").get<double>();
    if (j.contains("notify_interval_s")) d.notify_interval_s = j.at("notify_interval_s").get<double>();
  }
  d.validate();
  return d;
}

json subject_json(const session::SubjectEntry& e) {
  return json{{"pseudonym", e.pseudonym},
              {"age", e.age},
              {"sex", session::to_string(e.sex)},
              {"self_reported_condition", e.self_reported_condition}};
}

session::SubjectEntry subject_from_json(const json& j) {
  session::SubjectEntry e;
  e.pseudonym = j.at("pseudonym").get<std::string>();
  e.age = j.at("age").get<int>();
  e.sex = session::sex_from_string(j.value("sex", std::string("unspecified")));
  e.self_reported_condition = j.value("self_reported_condition", std::string());
  return e;
}

json config_json(const session::SessionConfig& c) {
  return json{{"min_duration_s", c.min_duration_s},
              {"max_duration_s", c.max_duration_s},
              {"gap_timeout_s", c.gap_timeout_s},
              {"min_beats", c.min_beats}};
}

session::SessionConfig config_from_json(const json& j) {
  session::SessionConfig c;
  c.min_duration_s = j.at("min_duration_s").get<double>();
  c.max_duration_s = j.at("max_duration_s").get<double>();
  c.gap_timeout_s = j.at("gap_timeout_s").get<double>();
  c.min_beats = j.at("min_beats").get<std::size_t>();
  return c;
}

json record_json(const session::SessionRecord& r) {
  return json{
      {"session_id", r.session_id},
      {"subject", subject_json(r.subject)},
      {"config", config_json(r.config)},
      {"source", r.source ? source_json(*r.source) : json(nullptr)},
      {"started_at", r.started_at},
      {"duration_s", r.duration_s},
      {"rr", series_json(r.rr)},
      {"rr_clean", series_json(r.rr_clean)},
      {"removed_beats", r.removed_beats},
      {"report", r.report ? report_json(*r.report) : json(nullptr)},
      {"verdicts", r.verdicts ? verdicts_json(*r.verdicts) : json(nullptr)},
      {"state", session::to_string(r.state)},
      {"status_detail", r.status_detail},
  };
}

}  // namespace

std::string report_to_document(const hrv::HrvReport& report) { return report_json(report).dump(2); }

hrv::HrvReport report_from_document(std::string_view text) {
  const auto j = parse_or(text, ErrorCode::ParseError);
  require_schema(j);
  try {
    return report_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

std::string model_to_document(const svm::SvmModel& m) {
  json j{
      {"schema", kSchemaVersion},
      {"kind", "svm_model"},
      {"non_clinical", true},
      {"kernel",
       m.kernel.type == svm::Kernel::Type::linear ? json{{"type", "linear"}}
                                                  : json{{"type", "rbf"}, {"gamma", m.kernel.gamma}}},
      {"C", m.C},
      {"converged", m.converged},
      {"classes", {{"negative", m.negative_label}, {"positive", m.positive_label}}},
      {"feature_names", m.feature_names},
      {"scaler", {{"mean", m.scaler.mean}, {"stddev", m.scaler.stddev}}},
      {"support_vectors", m.support_vectors},
      {"dual_coefs", m.dual_coefs},
      {"bias", m.bias},
  };
  return j.dump(1);
}

svm::SvmModel model_from_document(std::string_view text) {
  const auto j = parse_or(text, ErrorCode::CorruptModel);
  require_schema(j);
  svm::SvmModel m;
  try {
    const auto& k = j.at("kernel");
    const auto type = k.at("type").get<std::string>();
    if (type == "linear") {
      m.kernel = svm::Kernel::linear();
    } else if (type == "rbf") {
      m.kernel = svm::Kernel::rbf(k.at("gamma").get<double>());
    } else {
      throw Error(ErrorCode::CorruptModel, "unknown kernel " + type);
    }
    m.C = j.at("C").get<double>();
    m.converged = j.value("converged", true);
    m.negative_label = j.at("classes").at("negative").get<std::string>();
    m.positive_label = j.at("classes").at("positive").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.stddev = j.at("scaler").at("stddev").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptModel, e.what());
  }
  const std::size_t d = m.feature_names.size();
  if (d == 0 || m.scaler.mean.size() != d || m.scaler.stddev.size() != d) {
    throw Error(ErrorCode::CorruptModel, "scaler does not match feature list");
  }
  if (m.support_vectors.empty() || m.support_vectors.size() != m.dual_coefs.size()) {
    throw Error(ErrorCode::CorruptModel, "support vectors and coefficients disagree");
  }
  for (const auto& sv : m.support_vectors) {
    if (sv.size() != d) throw Error(ErrorCode::CorruptModel, "support vector dimension mismatch");
  }
  for (double s : m.scaler.stddev) {
    if (!(s > 0.0)) throw Error(ErrorCode::CorruptModel, "non-positive scaler stddev");
  }
  return m;
}

std::string verdicts_to_document(const svm::ConditionResult& verdicts) {
  auto j = verdicts_json(verdicts);
  j["schema"] = kSchemaVersion;
  j["kind"] = "verdicts";
  j["non_clinical"] = true;
  return j.dump(2);
}

std::string record_to_canonical_json(const session::SessionRecord& record) { return record_json(record).dump(); }

session::SessionRecord record_from_json(std::string_view text) {
  const auto j = parse_or(text, ErrorCode::Corrupt);
  session::SessionRecord r;
  try {
    r.session_id = j.at("session_id").get<std::string>();
    r.subject = subject_from_json(j.at("subject"));
    r.config = config_from_json(j.at("config"));
    if (!j.at("source").is_null()) r.source = source_from_json(j.at("source"));
    r.started_at = j.at("started_at").get<std::string>();
    r.duration_s = j.at("duration_s").get<double>();
    r.rr = series_from_json(j.at("rr"));
    r.rr_clean = series_from_json(j.at("rr_clean"));
    r.removed_beats = j.at("removed_beats").get<std::size_t>();
    if (!j.at("report").is_null()) r.report = report_from_json(j.at("report"));
    if (!j.at("verdicts").is_null()) {
      const auto& v = j.at("verdicts");
      r.verdicts = svm::ConditionResult{prediction_from_json(v.at("stress")),
                                        prediction_from_json(v.at("influenza"))};
    }
    r.state = session::state_from_string(j.at("state").get<std::string>());
    r.status_detail = j.at("status_detail").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    throw Error(ErrorCode::Corrupt, e.what());
  }
  return r;
}

std::string record_summary_document(const session::SessionRecord& r) {
  json j{
      {"schema", kSchemaVersion},
      {"session_id", r.session_id},
      {"state", session::to_string(r.state)},
      {"duration_s", r.duration_s},
      {"min_duration_s", r.config.min_duration_s},
      {"beat_count", r.rr.size()},
      {"clean_beat_count", r.rr_clean.size()},
      {"removed_beats", r.removed_beats},
      {"status_detail", r.status_detail},
      {"report", r.report ? report_json(*r.report) : json(nullptr)},
      {"verdicts", r.verdicts ? verdicts_json(*r.verdicts) : json(nullptr)},
  };
  return j.dump();
}

std::string live_event_document(const std::string& session_id, std::uint64_t seq, const session::LiveEvent& e) {
  json j{
      {"schema", kSchemaVersion},
      {"session_id", session_id},
      {"seq", seq},
      {"elapsed_s", e.elapsed_s},
      {"hr_bpm", e.hr_bpm},
      {"beat_count", e.beat_count},
      {"signal", session::to_string(e.signal)},
      {"new_beats_ms", e.new_beats_ms},
  };
  return j.dump();
}

std::string source_to_document(const sources::SourceDescriptor& source) { return source_json(source).dump(); }

sources::SourceDescriptor source_from_document(std::string_view text) {
  const auto j = parse_or(text, ErrorCode::InvalidArgument);
  try {
    return source_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, e.what());
  }
}

session::SubjectEntry subject_from_document(std::string_view text) {
  const auto j = parse_or(text, ErrorCode::InvalidEntry);
  try {
    auto e = subject_from_json(j);
    e.validate();
    return e;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidEntry, e.what());
  }
}

CreateRequest create_request_from_document(std::string_view text) {
  const auto j = parse_or(text, ErrorCode::InvalidEntry);
  CreateRequest req;
  try {
    req.subject = subject_from_json(j);
    if (j.contains("config") && !j.at("config").is_null()) {
      const auto& c = j.at("config");
      req.config.min_duration_s = c.value("min_duration_s", req.config.min_duration_s);
      req.config.max_duration_s = c.value("max_duration_s", req.config.max_duration_s);
      req.config.gap_timeout_s = c.value("gap_timeout_s", req.config.gap_timeout_s);
      req.config.min_beats = c.value("min_beats", req.config.min_beats);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidEntry, e.what());
  }
  req.subject.validate();
  try {
    req.config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidEntry, e.detail());
  }
  return req;
}

std::string devices_document(const sources::SourceListing& listing) {
  json devices = json::array();
  for (const auto& d : listing.sources) devices.push_back(source_json(d));
  return json{{"schema", kSchemaVersion}, {"devices", devices}, {"diagnostics", listing.diagnostics}}.dump();
}

std::string receipt_document(const persistence::UploadReceipt& r) {
  json delays = json::array();
  for (auto d : r.delays) delays.push_back(d.count());
  return json{{"schema", kSchemaVersion},
              {"status", r.status},
              {"attempts", r.attempts},
              {"remote_id", r.remote_id ? json(*r.remote_id) : json(nullptr)},
              {"delays_ms", delays}}
      .dump();
}

std::string error_document(ErrorCode code, std::string_view detail) {
  return json{{"error", to_string(code)}, {"detail", detail}}.dump();
}

}  // namespace shesop::documents
