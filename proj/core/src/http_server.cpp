#include "shesop/http_server.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "shesop/documents.hpp"
#include "shesop/error.hpp"

namespace shesop::service {

BindAddress BindAddress::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::InvalidArgument, "bind address must be host:port, got '" + text + "'");
  }
  BindAddress a;
  a.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    a.port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || a.port < 0 || a.port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad port in '" + text + "'");
  }
  return a;
}

BindAddress BindAddress::from_env() {
  const char* bind = std::getenv("SHESOP_BIND");
  return bind && *bind ? parse(bind) : BindAddress{};
}

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidEntry: return 422;
    case ErrorCode::UnknownSession:
    case ErrorCode::SourceUnavailable: return 404;
    case ErrorCode::WrongState: return 409;
    case ErrorCode::TooManySessions: return 429;
    case ErrorCode::Rejected:
    case ErrorCode::Unreachable: return 502;
    case ErrorCode::UploadNotConfigured: return 503;
    case ErrorCode::AnalysisFailed:
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

constexpr const char* kJson = "application/json";

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  std::string cors_origin;
  httplib::Server server;
  std::thread thread;

  Impl(SessionService& s, std::string origin) : service(s), cors_origin(std::move(origin)) { routes(); }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        res.status = http_status(e.code());
        res.set_content(documents::error_document(e.code(), e.detail()), kJson);
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(documents::error_document(ErrorCode::IoError, e.what()), kJson);
      }
    };
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.new_task_queue = [] { return new httplib::ThreadPool(32); };

    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"schema":1,"status":"ok"})", kJson);
    });

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto create = documents::create_request_from_document(req.body);
      const auto id = service.create(create.subject, create.config);
      res.status = 201;
      res.set_content(R"({"schema":1,"session_id":")" + id + "\"}", kJson);
    }));

    server.Get("/devices", guarded([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(documents::devices_document(service.devices()), kJson);
    }));

    server.Post(R"(/sessions/([^/]+)/attach)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      service.engine().state(id);  // 404 before parsing the body
      service.attach(id, documents::source_from_document(req.body));
      res.set_content(R"({"schema":1,"state":"Recording"})", kJson);
    }));

    server.Get(R"(/sessions/([^/]+)/live)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto sub = service.subscribe(req.matches[1]);
      res.set_chunked_content_provider("application/x-ndjson", [sub](std::size_t, httplib::DataSink& sink) {
        std::string doc;
        for (;;) {
          switch (sub->wait_next(doc, std::chrono::milliseconds(250))) {
            case Subscription::Status::item:
              return sink.write(doc.data(), doc.size());
            case Subscription::Status::closed:
              sink.done();
              return true;
            case Subscription::Status::dropped:
              return false;
            case Subscription::Status::timeout:
              if (!sink.is_writable()) return false;
              break;
          }
        }
      });
    }));

    server.Post(R"(/sessions/([^/]+)/stop)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto record = service.stop(req.matches[1]);
      res.set_content(documents::record_summary_document(record), kJson);
    }));

    server.Post(R"(/sessions/([^/]+)/upload)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto receipt = service.upload(req.matches[1]);
      res.set_content(documents::receipt_document(receipt), kJson);
    }));

    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto record = service.record(req.matches[1]);
      res.set_content(persistence::session_document(record, session::utc_now()), kJson);
    }));
  }
};

HttpServer::HttpServer(SessionService& service, std::string cors_origin)
    : impl_(std::make_unique<Impl>(service, std::move(cors_origin))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const BindAddress& address) {
  int port = address.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(address.host);
  } else if (!impl_->server.bind_to_port(address.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::IoError, "cannot bind " + address.host + ":" + std::to_string(address.port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

int HttpServer::start(const BindAddress& address) {
  const int port = bind(address);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace shesop::service
