#ifndef CYBERDEF_ALERTSERVE_HTTP_HPP
#define CYBERDEF_ALERTSERVE_HTTP_HPP

// HTTP front end for the alert service (cpp-httplib).
//
//   GET  /v1/health    no auth
//   POST /v1/predict   X-Api-Key; body = JSON object of flow fields
//   POST /v1/feedback  X-Api-Key; body = {"alert_id": N, "actual_label": "..."}
//   GET  /v1/drift     X-Api-Key

#include <atomic>
#include <memory>
#include <thread>

#include "httplib.h"

#include "cyberdef/alertserve.hpp"

namespace cyberdef::serve {

namespace detail {

inline bool keys_equal(std::string_view a, std::string_view b) {
    // constant time in the key contents; only the length can leak
    if (a.size() != b.size() || b.empty()) return false;
    unsigned char diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
    return diff == 0;
}

inline void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void reply_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
    Json j = {{"error", message}};
    if (!field.empty()) j["field"] = field;
    reply(res, status, j);
}

} // namespace detail

/// Serves one immutable model snapshot. start() binds and returns once the
/// listener is up; stop() (or destruction) shuts down and flushes the logs.
class AlertService {
public:
    AlertService(detect::TrainedModel model, ServeConfig cfg)
        : model_(std::make_shared<const detect::TrainedModel>(std::move(model))), cfg_(std::move(cfg)) {
        validate(cfg_);
        schema_ = serving_schema(*model_);
        encoder_.emplace(model_->params, *schema_);
        store_ = std::make_unique<AlertStore>(cfg_.log_dir);
        routes();
    }

    AlertService(const AlertService&) = delete;
    AlertService& operator=(const AlertService&) = delete;

    ~AlertService() { stop(); }

    /// Binds host:port (port 0 picks a free one). Throws IoError when the
    /// address is unavailable.
    void start() {
        if (cfg_.port == 0) {
            port_ = server_.bind_to_any_port(cfg_.host);
            if (port_ < 0) throw IoError(cfg_.host, "cannot bind any port");
        } else {
            if (!server_.bind_to_port(cfg_.host, cfg_.port))
                throw IoError(cfg_.host + ":" + std::to_string(cfg_.port), "cannot bind (port busy or address invalid)");
            port_ = cfg_.port;
        }
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
        if (store_) store_->flush();
    }

    int port() const { return port_; }
    const detect::TrainedModel& model() const { return *model_; }
    const ServeConfig& config() const { return cfg_; }
    AlertStore& store() { return *store_; }

private:
    bool authorized(const httplib::Request& req, httplib::Response& res) const {
        if (detail::keys_equal(req.get_header_value("X-Api-Key"), cfg_.api_key)) return true;
        detail::reply_error(res, 401, "invalid or missing API key");
        return false;
    }

    void routes() {
        server_.set_payload_max_length(cfg_.max_body_bytes);
        // httplib's default adds SO_REUSEPORT, which lets a second server
        // silently share a busy port
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
        });
        server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            detail::reply_error(res, 500, what);
        });

        server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
            detail::reply(res, 200,
                          {{"status", "ok"},
                           {"model_version", model_->version},
                           {"classifier", detect::to_string(model_->kind())},
                           {"classes", model_->class_order}});
        });

        server_.Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            flows::FlowRecord record;
            try {
                record = parse_flow_body(req.body, schema_);
            } catch (const ValidationError& e) {
                detail::reply_error(res, 400, e.reason(), e.field());
                return;
            }
            std::vector<double> x(encoder_->width());
            encoder_->encode(record, x);
            const auto pred = detect::predict_encoded(*model_, x);
            const auto cat = categorize(pred, cfg_);
            const Alert a = store_->issue(pred, cat, model_->version);
            Json body = alert_json(a);
            body.erase("received_at");
            detail::reply(res, 200, body);
        });

        server_.Post("/v1/feedback", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            Json j;
            try {
                j = Json::parse(req.body);
            } catch (const Json::exception&) {
                detail::reply_error(res, 400, "not valid JSON", "body");
                return;
            }
            if (!j.is_object()) return detail::reply_error(res, 400, "expected a JSON object", "body");
            if (!j.contains("alert_id") || !j["alert_id"].is_number_unsigned())
                return detail::reply_error(res, 400, "expected a positive integer", "alert_id");
            if (!j.contains("actual_label") || !j["actual_label"].is_string())
                return detail::reply_error(res, 400, "expected a class name", "actual_label");
            const auto id = j["alert_id"].get<std::uint64_t>();
            const auto label = j["actual_label"].get<std::string>();
            const auto& classes = model_->class_order;
            if (std::find(classes.begin(), classes.end(), label) == classes.end())
                return detail::reply_error(res, 400, "unknown class '" + label + "'", "actual_label");
            try {
                const bool written = store_->record_feedback(id, label);
                detail::reply(res, 200, {{"alert_id", id}, {"actual_label", label}, {"recorded", written}});
            } catch (const NotFoundError& e) {
                detail::reply_error(res, 404, e.what(), "alert_id");
            }
        });

        server_.Get("/v1/drift", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            detail::reply(res, 200, drift_json(store_->drift(cfg_)));
        });
    }

    std::shared_ptr<const detect::TrainedModel> model_;
    ServeConfig cfg_;
    flows::SchemaPtr schema_;
    std::optional<detect::Encoder> encoder_;
    std::unique_ptr<AlertStore> store_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

} // namespace cyberdef::serve

#endif
