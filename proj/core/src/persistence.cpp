#include "shesop/persistence.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "shesop/documents.hpp"
#include "shesop/error.hpp"

namespace shesop::persistence {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string session_document(const session::SessionRecord& record, const std::string& created_at) {
  const std::string body = documents::record_to_canonical_json(record);
  json doc{
      {"schema", documents::kSchemaVersion},
      {"kind", "session"},
      {"created_at", created_at},
      {"sha256", sha256_hex(body)},
      {"record", json::parse(body)},
  };
  return doc.dump(1);
}

session::SessionRecord parse_session_document(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, e.what());
  }
  if (!doc.is_object() || !doc.contains("schema") || !doc.at("schema").is_number_integer()) {
    throw Error(ErrorCode::Corrupt, "missing schema field");
  }
  if (doc.at("schema").get<std::int64_t>() != documents::kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch,
                "session schema " + std::to_string(doc.at("schema").get<std::int64_t>()));
  }
  if (!doc.contains("record") || !doc.contains("sha256") || !doc.at("sha256").is_string()) {
    throw Error(ErrorCode::Corrupt, "missing record or digest");
  }
  const std::string body = doc.at("record").dump();
  const std::string expected = doc.at("sha256").get<std::string>();
  const std::string actual = sha256_hex(body);
  if (expected != actual) throw Error(ErrorCode::Corrupt, "digest " + actual + " != recorded " + expected);
  return documents::record_from_json(body);
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to " + path.string() + ": " + ec.message());
}

}  // namespace

std::filesystem::path save_session(const session::SessionRecord& record, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  write_atomically(path, session_document(record, session::utc_now()));
  return path;
}

session::SessionRecord load_session(const std::filesystem::path& path) {
  return parse_session_document(read_file(path));
}

SessionStore::SessionStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + root_.string() + ": " + ec.message());
}

std::filesystem::path SessionStore::path_for(const std::string& session_id) const {
  return root_ / (session_id + ".json");
}

std::filesystem::path SessionStore::save_session(const session::SessionRecord& record) {
  return persistence::save_session(record, path_for(record.session_id));
}

session::SessionRecord SessionStore::load_session(const std::string& session_id) const {
  return persistence::load_session(path_for(session_id));
}

void export_rr_csv(const session::SessionRecord& record, const std::filesystem::path& path) {
  if (record.rr.empty()) throw Error(ErrorCode::NoData, "session " + record.session_id + " has no beats");
  save_rr_csv(path.string(), record.rr);
}

namespace {

json receipt_json(const UploadReceipt& r) {
  json delays = json::array();
  for (auto d : r.delays) delays.push_back(d.count());
  return json{{"status", r.status},
              {"attempts", r.attempts},
              {"remote_id", r.remote_id ? json(*r.remote_id) : json(nullptr)},
              {"delays_ms", delays}};
}

}  // namespace

void append_receipt(const SessionStore& store, const std::string& session_id, const UploadReceipt& receipt) {
  const auto path = store.root() / (session_id + ".receipts.jsonl");
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + path.string());
  out << receipt_json(receipt).dump() << '\n';
}

std::vector<UploadReceipt> load_receipts(const SessionStore& store, const std::string& session_id) {
  std::vector<UploadReceipt> out;
  std::ifstream in(store.root() / (session_id + ".receipts.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      UploadReceipt r;
      r.status = j.at("status").get<int>();
      r.attempts = j.at("attempts").get<int>();
      if (!j.at("remote_id").is_null()) r.remote_id = j.at("remote_id").get<std::string>();
      for (const auto& d : j.at("delays_ms")) r.delays.emplace_back(d.get<std::int64_t>());
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Corrupt, e.what());
    }
  }
  return out;
}

}  // namespace shesop::persistence
