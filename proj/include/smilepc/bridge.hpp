#pragma once

// Client side of the bridge line protocol: a classifier living in a child
// process that speaks newline-delimited JSON on stdin/stdout.
//
//   -> {"op":"hello"}                        <- {"op":"hello","classes":[...],"n_points":N}
//   -> {"op":"classify","batch":[cloud,...]} <- {"op":"probs","batch":[[p0,...],...]}
//   -> {"op":"shutdown"}                     <- (process exits 0)

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"
#include "smilepc/blackbox.hpp"
#include "smilepc/error.hpp"

namespace smilepc {

enum class BridgeErrorKind { Protocol, InvalidProbabilities, SubprocessExit, Timeout };

inline std::string_view bridge_error_name(BridgeErrorKind k) {
    switch (k) {
        case BridgeErrorKind::Protocol: return "protocol violation";
        case BridgeErrorKind::InvalidProbabilities: return "invalid probabilities";
        case BridgeErrorKind::SubprocessExit: return "subprocess exited";
        case BridgeErrorKind::Timeout: return "timeout";
    }
    return "?";
}

class BridgeError : public Error {
public:
    BridgeError(BridgeErrorKind kind, std::size_t batch, const std::string& detail)
        : Error("bridge " + std::string(bridge_error_name(kind)) + " (batch " + std::to_string(batch) + "): " + detail),
          kind_(kind),
          batch_(batch) {}

    BridgeErrorKind kind() const noexcept { return kind_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    BridgeErrorKind kind_;
    std::size_t batch_;
};

/// A `/bin/sh -c` child with piped stdin/stdout; stderr is inherited.
class Subprocess {
public:
    explicit Subprocess(const std::string& command) {
        std::signal(SIGPIPE, SIG_IGN);
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0) throw IoError("pipe: " + std::string(std::strerror(errno)));
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw IoError("pipe: " + std::string(std::strerror(errno)));
        }
        pid_ = ::fork();
        if (pid_ < 0) throw IoError("fork: " + std::string(std::strerror(errno)));
        if (pid_ == 0) {
            // Own process group, so teardown also reaches anything the shell spawned.
            ::setpgid(0, 0);
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::setpgid(pid_, pid_);
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_ = to_child[1];
        out_ = from_child[0];
        ::fcntl(in_, F_SETFD, FD_CLOEXEC);
        ::fcntl(out_, F_SETFD, FD_CLOEXEC);
    }

    Subprocess(const Subprocess&) = delete;
    Subprocess& operator=(const Subprocess&) = delete;

    ~Subprocess() {
        close_stdin();
        if (out_ >= 0) ::close(out_);
        if (pid_ > 0 && !exit_status_) {
            if (!wait_exit(std::chrono::milliseconds(2000))) {
                ::kill(-pid_, SIGKILL);
                int st;
                ::waitpid(pid_, &st, 0);
            }
        }
    }

    /// Writes all bytes; false if the child closed its end.
    bool write_all(std::string_view data) {
        while (!data.empty()) {
            const auto n = ::write(in_, data.data(), data.size());
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            data.remove_prefix(static_cast<std::size_t>(n));
        }
        return true;
    }

    enum class ReadStatus { Line, Eof, Timeout };

    /// Reads one '\n'-terminated line (terminator stripped) within `timeout`.
    ReadStatus read_line(std::string& line, std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return ReadStatus::Line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return ReadStatus::Timeout;
            pollfd pfd{out_, POLLIN, 0};
            const int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
            if (r < 0) {
                if (errno == EINTR) continue;
                return ReadStatus::Eof;
            }
            if (r == 0) return ReadStatus::Timeout;
            char chunk[65536];
            const auto n = ::read(out_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                return ReadStatus::Eof;
            }
            if (n == 0) return ReadStatus::Eof;
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void close_stdin() {
        if (in_ >= 0) {
            ::close(in_);
            in_ = -1;
        }
    }

    /// Waits for the child to exit; false on timeout.
    bool wait_exit(std::chrono::milliseconds timeout) {
        if (exit_status_) return true;
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            int st;
            const pid_t r = ::waitpid(pid_, &st, WNOHANG);
            if (r == pid_) {
                exit_status_ = WIFEXITED(st) ? WEXITSTATUS(st) : 128 + WTERMSIG(st);
                return true;
            }
            if (r < 0) {
                exit_status_ = -1;
                return true;
            }
            if (std::chrono::steady_clock::now() >= deadline) return false;
            ::usleep(5000);
        }
    }

    std::optional<int> exit_status() const noexcept { return exit_status_; }
    /// Also the process group id of the child and its descendants.
    pid_t pid() const noexcept { return pid_; }

private:
    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    std::string buffer_;
    std::optional<int> exit_status_;
};

inline constexpr double kDefaultBridgeTimeoutSecs = 60.0;

/// Timeout from SMILEPC_BRIDGE_TIMEOUT_SECS when set and valid, else the default.
inline double bridge_timeout_from_env() {
    if (const char* v = std::getenv("SMILEPC_BRIDGE_TIMEOUT_SECS")) {
        char* end = nullptr;
        const double t = std::strtod(v, &end);
        if (end != v && *end == '\0' && t > 0) return t;
    }
    return kDefaultBridgeTimeoutSecs;
}

/// Classifier served by an external process. Strictly serial.
class BridgeClassifier final : public Classifier {
public:
    explicit BridgeClassifier(const std::string& command, double timeout_secs = kDefaultBridgeTimeoutSecs,
                              std::size_t batch_limit = 64)
        : proc_(command), timeout_(static_cast<long long>(timeout_secs * 1000.0)) {
        desc_.kind = ClassifierKind::Bridge;
        desc_.serial_only = true;
        desc_.batch_limit = batch_limit;
        const auto reply = exchange({{"op", "hello"}}, 0);
        if (reply.value("op", "") != "hello" || !reply.contains("classes") || !reply["classes"].is_array())
            fail(BridgeErrorKind::Protocol, 0, "bad hello reply: " + reply.dump());
        for (const auto& c : reply["classes"]) {
            if (!c.is_string()) fail(BridgeErrorKind::Protocol, 0, "class names must be strings");
            desc_.class_names.push_back(c.get<std::string>());
        }
        if (desc_.class_names.size() < 2) fail(BridgeErrorKind::Protocol, 0, "bridge must report at least two classes");
        if (reply.contains("n_points") && reply["n_points"].is_number_integer())
            n_points_ = reply["n_points"].get<std::size_t>();
    }

    ~BridgeClassifier() override {
        if (!broken_) {
            proc_.write_all(nlohmann::json{{"op", "shutdown"}}.dump() + "\n");
            proc_.close_stdin();
            proc_.wait_exit(std::chrono::milliseconds(2000));
        }
    }

    const ClassifierDescriptor& descriptor() const override { return desc_; }

    /// Point count the served model expects (0 when unreported).
    std::size_t n_points() const noexcept { return n_points_; }

    std::vector<ClassifierOutput> classify(std::span<const PointCloud> batch) override {
        const std::size_t index = batches_++;
        nlohmann::json clouds = nlohmann::json::array();
        for (const auto& cloud : batch) {
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : cloud) pts.push_back({p[0], p[1], p[2]});
            clouds.push_back(std::move(pts));
        }
        const auto reply = exchange({{"op", "classify"}, {"batch", std::move(clouds)}}, index);
        if (reply.value("op", "") == "error")
            fail(BridgeErrorKind::Protocol, index, "bridge reported: " + reply.value("msg", std::string("?")));
        if (reply.value("op", "") != "probs" || !reply.contains("batch") || !reply["batch"].is_array())
            fail(BridgeErrorKind::Protocol, index, "expected a probs reply");
        const auto& rows = reply["batch"];
        if (rows.size() != batch.size())
            fail(BridgeErrorKind::Protocol, index,
                 "expected " + std::to_string(batch.size()) + " outputs, got " + std::to_string(rows.size()));
        std::vector<ClassifierOutput> out;
        out.reserve(rows.size());
        for (const auto& row : rows) {
            if (!row.is_array()) fail(BridgeErrorKind::Protocol, index, "probability row must be an array");
            ClassifierOutput o;
            for (const auto& v : row) {
                if (!v.is_number()) fail(BridgeErrorKind::Protocol, index, "probabilities must be numbers");
                o.probs.push_back(v.get<double>());
            }
            if (auto why = check_probabilities(o.probs, desc_.classes()))
                fail(BridgeErrorKind::InvalidProbabilities, index, *why);
            out.push_back(std::move(o));
        }
        return out;
    }

    pid_t pid() const noexcept { return proc_.pid(); }

private:
    [[noreturn]] void fail(BridgeErrorKind kind, std::size_t batch, const std::string& detail) {
        broken_ = true;
        throw BridgeError(kind, batch, detail);
    }

    nlohmann::json exchange(const nlohmann::json& request, std::size_t batch) {
        if (broken_) throw BridgeError(BridgeErrorKind::SubprocessExit, batch, "bridge is no longer usable");
        if (!proc_.write_all(request.dump() + "\n")) fail(BridgeErrorKind::SubprocessExit, batch, "write to bridge failed");
        std::string line;
        switch (proc_.read_line(line, timeout_)) {
            case Subprocess::ReadStatus::Line: break;
            case Subprocess::ReadStatus::Eof: fail(BridgeErrorKind::SubprocessExit, batch, "bridge closed its output");
            case Subprocess::ReadStatus::Timeout:
                fail(BridgeErrorKind::Timeout, batch, "no reply within " + std::to_string(timeout_.count()) + " ms");
        }
        nlohmann::json reply = nlohmann::json::parse(line, nullptr, false);
        if (reply.is_discarded() || !reply.is_object()) fail(BridgeErrorKind::Protocol, batch, "malformed reply line");
        return reply;
    }

    Subprocess proc_;
    std::chrono::milliseconds timeout_;
    ClassifierDescriptor desc_;
    std::size_t n_points_ = 0;
    std::size_t batches_ = 0;
    bool broken_ = false;
};

}  // namespace smilepc
