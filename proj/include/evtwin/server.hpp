#ifndef EVTWIN_SERVER_HPP
#define EVTWIN_SERVER_HPP

#include "evtwin/twin.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

namespace evtwin {

using Clock = std::chrono::steady_clock;

struct ServerOptions
{
    std::chrono::milliseconds publish_interval{100};  ///< at most 10 stream messages per second
    std::chrono::milliseconds heartbeat_interval{1000};
    std::chrono::seconds idle_expiry{30 * 60};
    std::size_t max_events_per_message = 500;
    std::size_t max_event_page = 1000;
};

inline std::string utc_now_iso()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// 128 random bits as hex.
inline std::string new_session_id()
{
    static std::mutex mu;
    static std::random_device rd;
    std::lock_guard lock(mu);
    std::string id;
    for (int i = 0; i < 4; ++i) id += hex64(rd()).substr(8);
    return id;
}

/// Per-subscriber outbox of newline-delimited JSON messages.
struct Subscriber
{
    std::deque<std::string> outbox;
    bool needs_full = true;
    bool closed = false;
};

/// A Twin advanced by its own executor thread. All state is guarded by one mutex, so
/// commands and snapshots only ever see tick boundaries.
class Session
{
public:
    Session(std::string id, ScenarioConfig config, ServerOptions opts)
        : id_(std::move(id)), opts_(opts), twin_(std::move(config)), last_activity_(Clock::now())
    {
        published_ = twin_.snapshot();
        executor_ = std::thread([this] { loop(); });
    }

    ~Session() { shutdown("deleted"); }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return id_; }

    /// End all streams and stop the executor.
    void shutdown(const std::string& reason)
    {
        {
            std::lock_guard lock(mu_);
            if (stopping_) return;
            stopping_ = true;
            broadcast_locked(nlohmann::json{{"type", "end"}, {"reason", reason}, {"tick", twin_.tick()}}.dump());
            for (auto& s : subs_) s->closed = true;
        }
        cv_.notify_all();
        if (executor_.joinable()) executor_.join();
    }

    nlohmann::json status()
    {
        std::lock_guard lock(mu_);
        touch();
        return status_locked();
    }

    nlohmann::json snapshot()
    {
        std::lock_guard lock(mu_);
        touch();
        auto s = twin_.snapshot();
        s["type"] = "snapshot";
        s["session"] = id_;
        s["wall_clock"] = utc_now_iso();
        return s;
    }

    nlohmann::json control(const nlohmann::json& cmd)
    {
        nlohmann::json ack;
        {
            std::lock_guard lock(mu_);
            touch();
            ack = twin_.apply(cmd);
            next_due_ = Clock::now();
            nlohmann::json ev{{"type", "event"}, {"event", "command"}, {"command", cmd}, {"applied_at_tick", ack["applied_at_tick"]}};
            broadcast_locked(ev.dump());
        }
        cv_.notify_all();
        return ack;
    }

    nlohmann::json events_page(std::size_t since, std::size_t limit)
    {
        std::lock_guard lock(mu_);
        touch();
        const auto& ev = twin_.events();
        nlohmann::json page = nlohmann::json::array();
        std::size_t i = std::min(since, ev.size());
        for (; i < ev.size() && page.size() < limit; ++i) {
            auto j = to_json(ev[i]);
            j["seq"] = i;
            page.push_back(std::move(j));
        }
        return {{"schema_version", kApiSchemaVersion}, {"since", since}, {"next", i}, {"total", ev.size()}, {"events", page}};
    }

    nlohmann::json commands()
    {
        std::lock_guard lock(mu_);
        touch();
        nlohmann::json log = nlohmann::json::array();
        for (const auto& c : twin_.command_log()) log.push_back(to_json(c));
        return {{"schema_version", kApiSchemaVersion},
                {"config", to_json(twin_.initial_config())},
                {"commands", log},
                {"tail_ticks", twin_.ticks_since_command()},
                {"snapshot_hash", hex64(twin_.snapshot_hash())},
                {"ticks_hashed", twin_.snapshot_hashes().size()}};
    }

    std::vector<std::uint64_t> snapshot_hashes()
    {
        std::lock_guard lock(mu_);
        return twin_.snapshot_hashes();
    }

    std::shared_ptr<Subscriber> subscribe()
    {
        auto s = std::make_shared<Subscriber>();
        {
            std::lock_guard lock(mu_);
            touch();
            if (stopping_) {
                s->outbox.push_back(nlohmann::json{{"type", "end"}, {"reason", "ended"}}.dump());
                s->closed = true;
                return s;
            }
            subs_.push_back(s);
            publish_locked(); // newcomer gets a full snapshot of the current tick now
        }
        cv_.notify_all();
        return s;
    }

    void unsubscribe(const std::shared_ptr<Subscriber>& s)
    {
        std::lock_guard lock(mu_);
        std::erase(subs_, s);
        touch();
    }

    /// Wait up to `timeout` for messages; returns them (possibly none) and whether the feed ended.
    std::pair<std::vector<std::string>, bool> drain(const std::shared_ptr<Subscriber>& s, std::chrono::milliseconds timeout)
    {
        std::unique_lock lock(mu_);
        sub_cv_.wait_for(lock, timeout, [&] { return !s->outbox.empty() || s->closed; });
        std::vector<std::string> out(s->outbox.begin(), s->outbox.end());
        s->outbox.clear();
        return {std::move(out), s->closed};
    }

    bool expired(Clock::time_point now)
    {
        std::lock_guard lock(mu_);
        return subs_.empty() && now - last_activity_ > opts_.idle_expiry;
    }

private:
    void touch() { last_activity_ = Clock::now(); }

    nlohmann::json status_locked() const
    {
        return {{"schema_version", kApiSchemaVersion},
                {"id", id_},
                {"mode", twin_.mode() == RunMode::running ? "running" : "paused"},
                {"speed", twin_.speed()},
                {"tick", twin_.tick()},
                {"day", twin_.simulation().world().day},
                {"finished", twin_.finished()},
                {"subscribers", subs_.size()},
                {"commands", twin_.command_log().size()},
                {"scenario_hash", scenario_hash(twin_.initial_config())},
                {"snapshot_hash", hex64(twin_.snapshot_hash())}};
    }

    void broadcast_locked(const std::string& msg)
    {
        for (auto& s : subs_)
            if (!s->closed) s->outbox.push_back(msg);
        sub_cv_.notify_all();
        last_message_ = Clock::now();
    }

    /// One message to every subscriber: full snapshot for newcomers, delta for the rest.
    void publish_locked()
    {
        const auto& cur = twin_.snapshot();
        nlohmann::json events = nlohmann::json::array();
        const auto& all = twin_.events();
        std::size_t first = std::max(events_published_, all.size() > opts_.max_events_per_message
                                                            ? all.size() - opts_.max_events_per_message
                                                            : std::size_t{0});
        for (std::size_t i = first; i < all.size(); ++i) {
            auto j = to_json(all[i]);
            j["seq"] = i;
            events.push_back(std::move(j));
        }
        events_published_ = all.size();
        const std::string clock = utc_now_iso();
        std::string full_msg, delta_msg;
        for (auto& s : subs_) {
            if (s->closed) continue;
            if (s->needs_full) {
                if (full_msg.empty()) {
                    auto m = cur;
                    m["type"] = "snapshot";
                    m["session"] = id_;
                    m["wall_clock"] = clock;
                    m["events"] = events;
                    full_msg = m.dump();
                }
                s->outbox.push_back(full_msg);
                s->needs_full = false;
            } else {
                if (delta_msg.empty()) {
                    auto m = snapshot_delta(published_, cur);
                    m["type"] = "delta";
                    m["session"] = id_;
                    m["wall_clock"] = clock;
                    m["events"] = events;
                    delta_msg = m.dump();
                }
                s->outbox.push_back(delta_msg);
            }
        }
        published_ = cur;
        published_tick_ = twin_.tick();
        published_hash_ = twin_.snapshot_hash();
        last_publish_ = last_message_ = Clock::now();
        sub_cv_.notify_all();
    }

    void loop()
    {
        std::unique_lock lock(mu_);
        next_due_ = Clock::now();
        while (!stopping_) {
            const auto now = Clock::now();
            if (twin_.mode() == RunMode::running && !twin_.finished() && now >= next_due_) {
                const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / twin_.speed()));
                twin_.advance(1);
                next_due_ = std::max(next_due_ + period, now - 4 * period);
            }
            const bool changed = twin_.snapshot_hash() != published_hash_ || twin_.tick() != published_tick_;
            if (changed && now - last_publish_ >= opts_.publish_interval) publish_locked();
            if (twin_.finished() && !changed && !ended_) {
                ended_ = true;
                broadcast_locked(nlohmann::json{{"type", "end"}, {"reason", "finished"}, {"tick", twin_.tick()}}.dump());
                for (auto& s : subs_) s->closed = true;
                sub_cv_.notify_all();
            }
            if (!changed && now - last_message_ >= opts_.heartbeat_interval) {
                nlohmann::json hb{{"type", "heartbeat"},
                                  {"tick", twin_.tick()},
                                  {"mode", twin_.mode() == RunMode::running ? "running" : "paused"},
                                  {"wall_clock", utc_now_iso()}};
                broadcast_locked(hb.dump());
            }
            auto wake = std::min(last_publish_ + opts_.publish_interval, last_message_ + opts_.heartbeat_interval);
            if (twin_.mode() == RunMode::running && !twin_.finished()) wake = std::min(wake, next_due_);
            wake = std::max(wake, Clock::now() + std::chrono::milliseconds(1));
            cv_.wait_until(lock, wake);
        }
    }

    std::string id_;
    ServerOptions opts_;
    std::mutex mu_;
    std::condition_variable cv_;     ///< wakes the executor
    std::condition_variable sub_cv_; ///< wakes stream writers
    Twin twin_;
    std::vector<std::shared_ptr<Subscriber>> subs_;
    nlohmann::json published_;
    std::int64_t published_tick_ = 0;
    std::uint64_t published_hash_ = 0;
    std::size_t events_published_ = 0;
    Clock::time_point last_activity_;
    Clock::time_point last_publish_{};
    Clock::time_point last_message_ = Clock::now();
    Clock::time_point next_due_{};
    bool stopping_ = false;
    bool ended_ = false;
    std::thread executor_;
};

/// Owns sessions and expires idle ones.
class SessionManager
{
public:
    explicit SessionManager(ServerOptions opts = {}) : opts_(opts)
    {
        reaper_ = std::thread([this] {
            std::unique_lock lock(mu_);
            while (!stop_) {
                cv_.wait_for(lock, std::chrono::seconds(1));
                const auto now = Clock::now();
                for (auto it = sessions_.begin(); it != sessions_.end();)
                    if (it->second->expired(now)) {
                        it->second->shutdown("expired");
                        it = sessions_.erase(it);
                    } else {
                        ++it;
                    }
            }
        });
    }

    ~SessionManager()
    {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        reaper_.join();
        for (auto& [_, s] : sessions_) s->shutdown("server stopping");
    }

    std::shared_ptr<Session> create(ScenarioConfig config)
    {
        auto id = new_session_id();
        auto s = std::make_shared<Session>(id, std::move(config), opts_);
        std::lock_guard lock(mu_);
        sessions_.emplace(id, s);
        return s;
    }

    std::shared_ptr<Session> find(const std::string& id)
    {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    std::shared_ptr<Session> require(const std::string& id)
    {
        auto s = find(id);
        if (!s) throw CommandError(404, "unknown session '" + id + "'");
        return s;
    }

    bool remove(const std::string& id)
    {
        std::shared_ptr<Session> s;
        {
            std::lock_guard lock(mu_);
            auto it = sessions_.find(id);
            if (it == sessions_.end()) return false;
            s = it->second;
            sessions_.erase(it);
        }
        s->shutdown("deleted");
        return true;
    }

    std::vector<std::string> ids()
    {
        std::lock_guard lock(mu_);
        std::vector<std::string> out;
        for (const auto& [id, _] : sessions_) out.push_back(id);
        return out;
    }

    const ServerOptions& options() const { return opts_; }

private:
    ServerOptions opts_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::thread reaper_;
    bool stop_ = false;
};

/// HTTP front end. Streams are newline-delimited JSON over chunked transfer.
class TwinServer
{
public:
    explicit TwinServer(ServerOptions opts = {}, nlohmann::json site_geojson = default_site().geojson())
        : sessions_(opts), site_(std::move(site_geojson))
    {
        routes();
    }

    ~TwinServer() { stop(); }

    /// Serve a directory of static assets (the built dashboard) at "/".
    bool mount_static(const std::string& dir) { return http_.set_mount_point("/", dir); }

    int bind_any(const std::string& host = "127.0.0.1") { return http_.bind_to_any_port(host); }
    bool bind(const std::string& host, int port) { return http_.bind_to_port(host, port); }
    bool listen_after_bind() { return http_.listen_after_bind(); }
    bool listen(const std::string& host, int port) { return http_.listen(host, port); }
    void stop()
    {
        if (http_.is_running()) http_.stop();
    }
    void wait_until_ready() { http_.wait_until_ready(); }

    SessionManager& sessions() { return sessions_; }

private:
    static void reply(httplib::Response& res, int status, const nlohmann::json& body)
    {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn)
    {
        try {
            fn();
        } catch (const CommandError& e) {
            reply(res, e.status(), e.body());
        } catch (const ConfigError& e) {
            reply(res, 400, {{"error", "invalid scenario"}, {"violations", e.violations()}});
        } catch (const nlohmann::json::exception& e) {
            reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", e.what()}});
        }
    }

    void routes()
    {
        using httplib::Request;
        using httplib::Response;
        using nlohmann::json;

        http_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        http_.Options(R"(/api/.*)", [](const Request&, Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        http_.Get("/api/site", [this](const Request&, Response& res) {
            res.set_content(site_.dump(), "application/geo+json");
        });

        http_.Get("/api/version", [](const Request&, Response& res) {
            reply(res, 200, {{"api_schema_version", kApiSchemaVersion}, {"scenario_schema_version", kScenarioSchemaVersion}});
        });

        http_.Get("/api/sessions", [this](const Request&, Response& res) { reply(res, 200, {{"sessions", sessions_.ids()}}); });

        http_.Post("/api/sessions", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                const json body = req.body.empty() ? json(nullptr) : json::parse(req.body);
                auto s = sessions_.create(session_config(body));
                auto st = s->status();
                reply(res, 201, {{"id", s->id()}, {"mode", st["mode"]}, {"tick", st["tick"]}});
            });
        });

        http_.Get(R"(/api/sessions/([0-9a-f]+))", [this](const Request& req, Response& res) {
            guarded(res, [&] { reply(res, 200, sessions_.require(req.matches[1])->status()); });
        });

        http_.Delete(R"(/api/sessions/([0-9a-f]+))", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                if (!sessions_.remove(req.matches[1])) throw CommandError(404, "unknown session");
                reply(res, 200, {{"deleted", std::string(req.matches[1])}});
            });
        });

        http_.Post(R"(/api/sessions/([0-9a-f]+)/control)", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                auto s = sessions_.require(req.matches[1]);
                reply(res, 200, s->control(json::parse(req.body)));
            });
        });

        http_.Get(R"(/api/sessions/([0-9a-f]+)/snapshot)", [this](const Request& req, Response& res) {
            guarded(res, [&] { reply(res, 200, sessions_.require(req.matches[1])->snapshot()); });
        });

        http_.Get(R"(/api/sessions/([0-9a-f]+)/commands)", [this](const Request& req, Response& res) {
            guarded(res, [&] { reply(res, 200, sessions_.require(req.matches[1])->commands()); });
        });

        http_.Get(R"(/api/sessions/([0-9a-f]+)/events)", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                auto s = sessions_.require(req.matches[1]);
                const auto max = sessions_.options().max_event_page;
                std::size_t since = 0, limit = max;
                auto read = [&](const char* key, std::size_t& out) {
                    if (!req.has_param(key)) return;
                    const auto v = req.get_param_value(key);
                    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
                    if (v.empty() || ec != std::errc() || end != v.data() + v.size())
                        throw CommandError(400, "since and limit must be non-negative integers");
                };
                read("since", since);
                read("limit", limit);
                limit = std::min(limit, max);
                reply(res, 200, s->events_page(since, limit));
            });
        });

        http_.Get(R"(/api/sessions/([0-9a-f]+)/stream)", [this](const Request& req, Response& res) {
            auto s = sessions_.find(req.matches[1]);
            if (!s) return reply(res, 404, {{"error", "unknown session"}});
            auto sub = s->subscribe();
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "application/x-ndjson",
                [s, sub](std::size_t, httplib::DataSink& sink) {
                    auto [msgs, closed] = s->drain(sub, std::chrono::milliseconds(250));
                    for (const auto& m : msgs) {
                        const std::string line = m + "\n";
                        if (!sink.write(line.data(), line.size())) return false;
                    }
                    if (closed) sink.done();
                    return true;
                },
                [s, sub](bool) { s->unsubscribe(sub); });
        });
    }

    SessionManager sessions_;
    nlohmann::json site_;
    httplib::Server http_;
};

} // namespace evtwin

#endif // EVTWIN_SERVER_HPP
