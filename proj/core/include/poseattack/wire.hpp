// Line-delimited JSON protocol over a stream socket.
//
// Requests (one per line):
//   {"v":1,"hello":true,"session_id":s}
//   {"v":1,"ping":true}
//   {"v":1,"session_id":s,"query_id":q,
//    "surrogate":{"class_id":c,"appearance_seed":n,"pose":{"q":[4],"t":[3]}}}
// Responses (one per line, ordered per connection):
//   {"v":1,"hello":true,"scale_withheld":b,"scene_id":s}
//   {"v":1,"pong":true}
//   {"v":1,"query_id":q,"status":"localized"|"not_localized"|"rejected_by_defense",
//    "pose"?:{...},"diagnostics"?:{...}}
//   {"v":1,"error":{"code":...,"message":...},"query_id"?:q}
//
// Protocol errors keep the connection alive. The whole response stream is a
// pure function of (scenario, profile, defense, server seed, request stream).

#pragma once

#include <atomic>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "poseattack/locserver.hpp"
#include "poseattack/pose_io.hpp"

namespace poseattack {

struct Handshake {
  bool scale_withheld = false;
  std::string scene_id;
};

Json to_json(const LocalizeRequest& req);
LocalizeRequest request_from_json(const Json& j);
Json to_json(const LocalizeResponse& resp);
LocalizeResponse response_from_json(const Json& j);

/// Handles one raw request line and returns the raw response line (no
/// trailing newline). seen_query_ids tracks per-connection uniqueness.
std::string handle_request_line(const ServerModel& model, const std::string& line,
                                std::set<std::string>& seen_query_ids);

struct PortInUseError final : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ServerUnreachableError final : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thread-per-connection TCP line server over an immutable ServerModel.
class WireServer {
 public:
  WireServer(ServerModel model, std::string bind_address, int port);
  ~WireServer();
  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  /// Binds and starts accepting. Throws PortInUseError if the port is
  /// taken, std::runtime_error on other socket failures.
  void start();
  void stop();
  int port() const { return port_; }
  const ServerModel& model() const { return model_; }

 private:
  void accept_loop();
  void serve_connection(int fd);

  ServerModel model_;
  std::string bind_address_;
  int requested_port_;
  int port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

/// Blocking one-line-per-request client.
class WireClient {
 public:
  WireClient() = default;
  ~WireClient();
  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  /// Throws ServerUnreachableError when the endpoint cannot be reached.
  void connect(const std::string& host, int port);
  void close();
  bool connected() const { return fd_ >= 0; }

  /// Sends one line and returns the raw response line.
  std::string request_line(const std::string& line);

  Handshake hello(const std::string& session_id);
  bool ping();
  /// Returns the parsed response plus the raw line as received.
  std::pair<LocalizeResponse, std::string> localize(const LocalizeRequest& req);

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// Splits "host:port"; throws std::invalid_argument on malformed input.
std::pair<std::string, int> parse_endpoint(const std::string& endpoint);

}  // namespace poseattack
