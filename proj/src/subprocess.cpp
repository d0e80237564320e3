#include "triagekit/subprocess.hpp"

#include <chrono>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "triagekit/errors.hpp"

namespace triagekit {

namespace {
// write() to a dead child must surface as EPIPE, not kill the process.
const bool kSigpipeIgnored = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
}();
}  // namespace

struct LineProtocolClient::Impl {
    std::string command;
    double timeout_s;
    pid_t pid = -1;
    int to_child = -1;    // we write requests here
    int from_child = -1;  // we read responses here
    std::string buffer;   // partial line carry-over
    bool spawned = false;
    bool dead = false;

    ~Impl() { shutdown(); }

    void spawn() {
        spawned = true;
        int in_pipe[2];   // parent -> child stdin
        int out_pipe[2];  // child stdout -> parent
        if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
            dead = true;
            throw ExternalScorerFailure("pipe() failed for command: " + command);
        }
        pid = fork();
        if (pid < 0) {
            dead = true;
            throw ExternalScorerFailure("fork() failed for command: " + command);
        }
        if (pid == 0) {
            dup2(in_pipe[0], STDIN_FILENO);
            dup2(out_pipe[1], STDOUT_FILENO);
            close(in_pipe[0]);
            close(in_pipe[1]);
            close(out_pipe[0]);
            close(out_pipe[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(in_pipe[0]);
        close(out_pipe[1]);
        to_child = in_pipe[1];
        from_child = out_pipe[0];
    }

    void shutdown() {
        if (to_child >= 0) close(to_child);
        if (from_child >= 0) close(from_child);
        to_child = from_child = -1;
        if (pid > 0) {
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
            pid = -1;
        }
    }

    void fail(const std::string& why) {
        dead = true;
        shutdown();
        throw ExternalScorerFailure(why + " (command: " + command + ")");
    }

    void write_line(const std::string& line) {
        std::string data = line + "\n";
        std::size_t off = 0;
        while (off < data.size()) {
            ssize_t n = write(to_child, data.data() + off, data.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(std::string("write failed: ") + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    // Next full line before the absolute deadline, or fail. The deadline is
    // per request, not per read, so a slow-dripping child cannot stall us.
    std::string read_line(std::chrono::steady_clock::time_point deadline) {
        for (;;) {
            if (auto nl = buffer.find('\n'); nl != std::string::npos) {
                std::string line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                return line;
            }
            auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (remaining.count() <= 0) fail("timeout waiting for response");
            struct pollfd pfd {
                from_child, POLLIN, 0
            };
            int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
            if (rc < 0) {
                if (errno == EINTR) continue;
                fail(std::string("poll failed: ") + std::strerror(errno));
            }
            if (rc == 0) fail("timeout waiting for response");
            char chunk[4096];
            ssize_t n = read(from_child, chunk, sizeof(chunk));
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(std::string("read failed: ") + std::strerror(errno));
            }
            if (n == 0) fail("child closed stdout");
            buffer.append(chunk, static_cast<std::size_t>(n));
        }
    }
};

LineProtocolClient::LineProtocolClient(std::string command, double timeout_s)
    : impl_(std::make_unique<Impl>()) {
    (void)kSigpipeIgnored;
    impl_->command = std::move(command);
    impl_->timeout_s = timeout_s;
}

LineProtocolClient::~LineProtocolClient() = default;

bool LineProtocolClient::failed() const { return impl_->dead; }

std::string LineProtocolClient::round_trip(const std::string& request, const std::string& expect_id) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (impl_->dead) throw ExternalScorerFailure("backend previously failed (command: " + impl_->command + ")");
    if (!impl_->spawned) impl_->spawn();
    impl_->write_line(request);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(impl_->timeout_s));
    // Responses may arrive in any order; keep reading until our id echoes.
    for (;;) {
        std::string line = impl_->read_line(deadline);
        nlohmann::json parsed = nlohmann::json::parse(line, nullptr, false);
        if (parsed.is_discarded()) impl_->fail("response is not valid JSON");
        if (parsed.value("id", "") == expect_id) return line;
    }
}

}  // namespace triagekit
