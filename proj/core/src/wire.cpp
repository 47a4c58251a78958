#include "poseattack/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace poseattack {

Json to_json(const LocalizeRequest& req) {
  Json pose = to_json(req.surrogate.local_pose);
  return Json{{"v", req.protocol_version},
              {"session_id", req.session_id},
              {"query_id", req.query_id},
              {"surrogate",
               Json{{"class_id", req.surrogate.class_id},
                    {"appearance_seed", req.surrogate.appearance_seed},
                    {"pose", pose}}}};
}

LocalizeRequest request_from_json(const Json& j) {
  LocalizeRequest req;
  req.protocol_version = j.at("v").get<int>();
  req.session_id = j.at("session_id").get<std::string>();
  req.query_id = j.at("query_id").get<std::string>();
  const Json& s = j.at("surrogate");
  req.surrogate.class_id = s.at("class_id").get<std::string>();
  req.surrogate.appearance_seed = s.value("appearance_seed", std::uint64_t{0});
  req.surrogate.local_pose = pose_from_json(s.at("pose"));
  return req;
}

Json to_json(const LocalizeResponse& resp) {
  Json j{{"v", 1}, {"query_id", resp.query_id}, {"status", status_name(resp.status)}};
  if (resp.pose.has_value()) j["pose"] = to_json(*resp.pose);
  if (resp.diagnostics.has_value()) j["diagnostics"] = Json{{"inlier_counts", *resp.diagnostics}};
  return j;
}

LocalizeResponse response_from_json(const Json& j) {
  LocalizeResponse resp;
  resp.query_id = j.at("query_id").get<std::string>();
  const std::string status = j.at("status").get<std::string>();
  if (status == "localized") resp.status = LocalizeStatus::localized;
  else if (status == "not_localized") resp.status = LocalizeStatus::not_localized;
  else if (status == "rejected_by_defense") resp.status = LocalizeStatus::rejected_by_defense;
  else throw std::invalid_argument("unknown status: " + status);
  if (j.contains("pose")) resp.pose = pose_from_json(j.at("pose"));
  if (j.contains("diagnostics")) {
    resp.diagnostics =
        j.at("diagnostics").at("inlier_counts").get<std::map<std::string, int>>();
  }
  return resp;
}

namespace {

std::string error_line(const std::string& code, const std::string& message,
                       const std::string& query_id = {}) {
  Json j{{"v", 1}, {"error", Json{{"code", code}, {"message", message}}}};
  if (!query_id.empty()) j["query_id"] = query_id;
  return j.dump();
}

}  // namespace

std::string handle_request_line(const ServerModel& model, const std::string& line,
                                std::set<std::string>& seen_query_ids) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception& e) {
    return error_line("MalformedRequest", std::string("invalid json: ") + e.what());
  }
  if (!j.is_object()) return error_line("MalformedRequest", "request must be a json object");
  if (!j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != 1)
    return error_line("MalformedRequest", "unsupported or missing protocol version");

  if (j.value("ping", false)) return Json{{"v", 1}, {"pong", true}}.dump();

  if (j.value("hello", false)) {
    return Json{{"v", 1},
                {"hello", true},
                {"scale_withheld", model.scale_withheld()},
                {"scene_id", model.scene.scene_id}}
        .dump();
  }

  if (j.contains("scene_id") && j["scene_id"].get<std::string>() != model.scene.scene_id)
    return error_line("UnknownScene", "server is not serving scene " +
                                          j["scene_id"].get<std::string>());

  LocalizeRequest req;
  try {
    req = request_from_json(j);
  } catch (const std::exception& e) {
    return error_line("MalformedRequest", e.what());
  }
  // query_id must be unique per session; one connection may carry several.
  if (!seen_query_ids.insert(req.session_id + "\n" + req.query_id).second)
    return error_line("MalformedRequest", "duplicate query_id in session", req.query_id);

  return to_json(handle_query(model, req)).dump();
}

// ---------------------------------------------------------------------------
// Sockets
// ---------------------------------------------------------------------------

namespace {

void write_all(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) throw std::runtime_error("socket write failed");
    off += static_cast<size_t>(n);
  }
}

// Reads one '\n'-terminated line into `line` using `buffer` as carry-over.
bool read_line(int fd, std::string& buffer, std::string& line) {
  for (;;) {
    const size_t pos = buffer.find('\n');
    if (pos != std::string::npos) {
      line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<size_t>(n));
  }
}

}  // namespace

WireServer::WireServer(ServerModel model, std::string bind_address, int port)
    : model_(std::move(model)), bind_address_(std::move(bind_address)), requested_port_(port) {}

WireServer::~WireServer() { stop(); }

void WireServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(requested_port_));
  if (::inet_pton(AF_INET, bind_address_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("invalid bind address: " + bind_address_);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (err == EADDRINUSE)
      throw PortInUseError("port in use: " + std::to_string(requested_port_));
    throw std::runtime_error(std::string("bind() failed: ") + std::strerror(err));
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("listen() failed");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);

  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void WireServer::stop() {
  if (!running_.exchange(false)) {
    if (accept_thread_.joinable()) accept_thread_.join();
    return;
  }
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers)
    if (w.joinable()) w.join();
}

void WireServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR && running_) continue;
      break;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void WireServer::serve_connection(int fd) {
  std::string buffer, line;
  std::set<std::string> seen_query_ids;  // one connection = one session instance
  while (running_ && read_line(fd, buffer, line)) {
    if (line.empty()) continue;
    std::string response;
    try {
      response = handle_request_line(model_, line, seen_query_ids);
    } catch (const std::exception& e) {
      response = error_line("InternalError", e.what());
    }
    try {
      write_all(fd, response + "\n");
    } catch (const std::exception&) {
      break;
    }
  }
  ::close(fd);
}

WireClient::~WireClient() { close(); }

void WireClient::connect(const std::string& host, int port) {
  close();
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ServerUnreachableError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ServerUnreachableError("invalid host address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw ServerUnreachableError("cannot connect to " + host + ":" + std::to_string(port));
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
  buffer_.clear();
}

void WireClient::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::string WireClient::request_line(const std::string& line) {
  if (fd_ < 0) throw ServerUnreachableError("client is not connected");
  write_all(fd_, line + "\n");
  std::string response;
  if (!read_line(fd_, buffer_, response))
    throw std::runtime_error("connection closed while waiting for response");
  return response;
}

Handshake WireClient::hello(const std::string& session_id) {
  const Json req{{"v", 1}, {"hello", true}, {"session_id", session_id}};
  const Json resp = Json::parse(request_line(req.dump()));
  if (!resp.value("hello", false)) throw std::runtime_error("unexpected hello response");
  Handshake h;
  h.scale_withheld = resp.at("scale_withheld").get<bool>();
  h.scene_id = resp.value("scene_id", std::string{});
  return h;
}

bool WireClient::ping() {
  const Json resp = Json::parse(request_line(Json{{"v", 1}, {"ping", true}}.dump()));
  return resp.value("pong", false);
}

std::pair<LocalizeResponse, std::string> WireClient::localize(const LocalizeRequest& req) {
  const std::string raw = request_line(to_json(req).dump());
  const Json j = Json::parse(raw);
  if (j.contains("error"))
    throw std::runtime_error("server error: " + j["error"].dump());
  return {response_from_json(j), raw};
}

std::pair<std::string, int> parse_endpoint(const std::string& endpoint) {
  const size_t colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= endpoint.size())
    throw std::invalid_argument("endpoint must be host:port, got: " + endpoint);
  const std::string host = endpoint.substr(0, colon);
  const int port = std::stoi(endpoint.substr(colon + 1));
  if (port <= 0 || port > 65535) throw std::invalid_argument("port out of range: " + endpoint);
  return {host, port};
}

}  // namespace poseattack
