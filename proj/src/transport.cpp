#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "mlc/error.hpp"
#include "mlc/extern_predictor.hpp"

namespace mlc {

namespace {

// POST <path> to an HTTP server, one request per call.
class HttpTransport final : public Transport {
public:
    // url: http://host:port/path
    explicit HttpTransport(std::string_view url) {
        constexpr std::string_view scheme = "http://";
        if (url.substr(0, scheme.size()) != scheme) throw ConfigError("endpoint must start with http://");
        const auto rest = url.substr(scheme.size());
        const auto slash = rest.find('/');
        host_port_ = std::string(rest.substr(0, slash));
        path_ = slash == std::string_view::npos ? "/v1" : std::string(rest.substr(slash));
        if (host_port_.empty()) throw ConfigError("endpoint has no host");
    }

    std::string roundtrip(std::int64_t, const std::string& line) override {
        httplib::Client client("http://" + host_port_);
        client.set_read_timeout(600, 0);
        const auto res = client.Post(path_, line, "application/x-ndjson");
        if (!res) throw PredictorError("model server at " + host_port_ + " unreachable: " + httplib::to_string(res.error()));
        if (res->status != 200) throw PredictorError("model server answered HTTP " + std::to_string(res->status));
        return res->body;
    }

private:
    std::string host_port_;
    std::string path_;
};

// Child process speaking NDJSON on stdin/stdout. Concurrent callers share the pipe; whichever
// caller is waiting reads lines and parks responses by id, so replies may come back in any order.
class StdioTransport final : public Transport {
public:
    explicit StdioTransport(const std::string& command) {
        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0) throw PredictorError("pipe() failed");
        pid_ = fork();
        if (pid_ < 0) throw PredictorError("fork() failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        fcntl(in_fd_, F_SETFD, FD_CLOEXEC);
        fcntl(out_fd_, F_SETFD, FD_CLOEXEC);
    }

    StdioTransport(const StdioTransport&) = delete;
    StdioTransport& operator=(const StdioTransport&) = delete;

    ~StdioTransport() override {
        close(in_fd_);
        close(out_fd_);
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == 0) {
            kill(pid_, SIGTERM);
            waitpid(pid_, &status, 0);
        }
    }

    std::string roundtrip(std::int64_t id, const std::string& line) override {
        {
            std::lock_guard w(write_mutex_);
            std::string msg = line + "\n";
            const char* p = msg.data();
            std::size_t left = msg.size();
            // SIGPIPE would kill the client when the server dies first
            struct sigaction ignore {};
            ignore.sa_handler = SIG_IGN;
            sigaction(SIGPIPE, &ignore, nullptr);
            while (left > 0) {
                const auto n = write(in_fd_, p, left);
                if (n <= 0) throw PredictorError("model server closed its input");
                p += n;
                left -= static_cast<std::size_t>(n);
            }
        }
        std::unique_lock lk(mutex_);
        for (;;) {
            if (const auto it = ready_.find(id); it != ready_.end()) {
                auto out = std::move(it->second);
                ready_.erase(it);
                return out;
            }
            if (broken_) throw PredictorError("model server exited");
            if (!reading_) {
                reading_ = true;
                lk.unlock();
                std::string resp;
                const bool ok = read_line(resp);
                lk.lock();
                reading_ = false;
                if (!ok) {
                    broken_ = true;
                } else {
                    std::int64_t rid = -1;
                    try {
                        rid = nlohmann::json::parse(resp).at("id").get<std::int64_t>();
                    } catch (const nlohmann::json::exception&) {
                        cv_.notify_all();
                        throw ProtocolError("unparseable response line from model server");
                    }
                    ready_[rid] = std::move(resp);
                }
                cv_.notify_all();
                continue;
            }
            cv_.wait(lk);
        }
    }

private:
    bool read_line(std::string& line) {
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return true;
            }
            char chunk[65536];
            const auto n = read(out_fd_, chunk, sizeof chunk);
            if (n <= 0) return false;
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::mutex write_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool reading_ = false;
    bool broken_ = false;
    std::string buffer_;
    std::map<std::int64_t, std::string> ready_;
};

}  // namespace

std::unique_ptr<Transport> make_transport(std::string_view endpoint) {
    if (endpoint.substr(0, 6) == "stdio:") return std::make_unique<StdioTransport>(std::string(endpoint.substr(6)));
    if (endpoint.substr(0, 7) == "http://") return std::make_unique<HttpTransport>(endpoint);
    throw ConfigError("unknown endpoint '" + std::string(endpoint) + "' (expected http://host:port/v1 or stdio:<cmd>)");
}

}  // namespace mlc
