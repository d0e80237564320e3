#pragma once

#include <memory>
#include <mutex>
#include <string>

namespace triagekit {

// Child process speaking one-JSON-object-per-line over stdin/stdout.
// One request in flight at a time; calls are serialized by an internal
// mutex, so a shared client is a thread-safe facade.
//
// Once the child dies or misbehaves the client stays failed: every later
// request throws immediately instead of respawning.
class LineProtocolClient {
public:
    // command runs under `sh -c`; the child is spawned lazily on first use.
    explicit LineProtocolClient(std::string command, double timeout_s = 10.0);
    ~LineProtocolClient();

    LineProtocolClient(const LineProtocolClient&) = delete;
    LineProtocolClient& operator=(const LineProtocolClient&) = delete;

    // Writes `request` + '\n', then reads lines until one arrives whose
    // "id" field equals expect_id (responses for other ids are dropped).
    // Throws ExternalScorerFailure on timeout, EOF, or write failure.
    std::string round_trip(const std::string& request, const std::string& expect_id);

    bool failed() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::mutex mutex_;
};

}  // namespace triagekit
