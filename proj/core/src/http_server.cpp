#include <thread>

#include <httplib.h>

#include "illusion/error.hpp"
#include "illusion/service.hpp"

namespace illusion {

struct HttpFrontend::Impl {
    ChallengeService& service;
    httplib::Server server;
    std::thread worker;

    explicit Impl(ChallengeService& s) : service(s) {}
};

namespace {

void apply(httplib::Response& res, const HttpResponse& out) {
    res.status = out.status;
    res.set_content(out.body, out.content_type);
}

}  // namespace

HttpFrontend::HttpFrontend(ChallengeService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& server = impl_->server;
    auto& svc = impl_->service;
    const std::string origin = svc.config().allow_origin;

    server.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
        if (!origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        }
        res.set_header("Cache-Control", "no-store");
    });
    server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/api/v1/challenge", [&svc](const httplib::Request& req, httplib::Response& res) {
        apply(res, svc.get_challenge(req.remote_addr));
    });
    server.Get(R"(/api/v1/audio/([^/]+)/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> segment;
        if (req.has_param("segment")) segment = req.get_param_value("segment");
        apply(res, svc.get_audio(req.matches[1], req.matches[2], segment, req.remote_addr));
    });
    server.Post("/api/v1/answer", [&svc](const httplib::Request& req, httplib::Response& res) {
        apply(res, svc.post_answer(req.body, req.remote_addr));
    });
}

HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpFrontend::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpFrontend::stop() {
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace illusion
