#pragma once

#include <memory>
#include <string>

#include "shesop/service.hpp"

namespace shesop::service {

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;

  /// "host:port"; Throws Error{InvalidArgument}.
  static BindAddress parse(const std::string& text);
  /// SHESOP_BIND or the default 127.0.0.1:8080.
  static BindAddress from_env();
};

/// HTTP facade over a SessionService.
///
///   POST /sessions                 SubjectEntry (+ optional "config") -> 201 {session_id}
///   GET  /devices                  -> {devices: [SourceDescriptor], diagnostics}
///   POST /sessions/{id}/attach     SourceDescriptor -> 200
///   GET  /sessions/{id}/live       newline-delimited LiveEventWire documents
///   POST /sessions/{id}/stop       -> record summary
///   GET  /sessions/{id}            -> stored session document
///   POST /sessions/{id}/upload     -> UploadReceipt
///
/// Errors are {"error": code, "detail": text}.
class HttpServer {
 public:
  HttpServer(SessionService& service, std::string cors_origin = "*");
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const BindAddress& address);
  /// Serves until stop(); blocks.
  void listen();
  /// bind() + listen() on a background thread.
  int start(const BindAddress& address);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace shesop::service
