#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "shesop/error.hpp"
#include "shesop/persistence.hpp"

namespace shesop::persistence {

std::optional<UploadTarget> UploadTarget::from_env() {
  const char* url = std::getenv("SHESOP_UPLOAD_URL");
  if (url == nullptr || *url == '\0') return std::nullopt;
  UploadTarget t;
  t.endpoint = url;
  if (const char* token = std::getenv("SHESOP_UPLOAD_TOKEN")) t.bearer_token = token;
  return t;
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint needs a scheme: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  SplitUrl u;
  u.origin = endpoint.substr(0, path_start);
  u.prefix = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!u.prefix.empty() && u.prefix.back() == '/') u.prefix.pop_back();
  return u;
}

std::optional<std::string> remote_id_of(const httplib::Result& res) {
  try {
    const auto j = nlohmann::json::parse(res->body);
    if (j.is_object() && j.contains("id") && j.at("id").is_string()) return j.at("id").get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  if (res->has_header("ETag")) return res->get_header_value("ETag");
  return std::nullopt;
}

}  // namespace

UploadReceipt upload(const session::SessionRecord& record, const UploadTarget& target, const Sleeper& sleeper) {
  if (target.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  const auto url = split_endpoint(target.endpoint);
  const std::string body = session_document(record, session::utc_now());
  const std::string path = url.prefix + "/" + record.session_id + ".json";

  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(target.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(target.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!target.bearer_token.empty()) client.set_bearer_token_auth(target.bearer_token);

  UploadReceipt receipt;
  std::chrono::milliseconds delay = target.backoff_base;
  std::string last_failure;
  for (int attempt = 1; attempt <= target.max_attempts; ++attempt) {
    if (attempt > 1) {
      receipt.delays.push_back(delay);
      if (sleeper) {
        sleeper(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
      delay *= 2;
    }
    receipt.attempts = attempt;
    auto res = client.Put(path, body, "application/json");
    if (!res) {
      receipt.status = 0;
      last_failure = httplib::to_string(res.error());
      continue;
    }
    receipt.status = res->status;
    if (res->status >= 200 && res->status < 300) {
      receipt.remote_id = remote_id_of(res);
      return receipt;
    }
    if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw Error(ErrorCode::Rejected, std::to_string(res->status));
  }
  throw Error(ErrorCode::Unreachable,
              "after " + std::to_string(receipt.attempts) + " attempts (" + last_failure + ")");
}

}  // namespace shesop::persistence
