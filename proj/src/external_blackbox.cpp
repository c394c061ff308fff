#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "stlad/blackbox.hpp"
#include "stlad/error.hpp"

namespace stlad {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

ExternalBlackBox::ExternalBlackBox(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw Error(ErrorCode::InvalidArgument, "external black-box command is empty");
  if (timeout_.count() <= 0) throw Error(ErrorCode::InvalidArgument, "external black-box timeout must be positive");
}

ExternalBlackBox::~ExternalBlackBox() { kill_child(); }

void ExternalBlackBox::start() {
  if (pid_ < 0) spawn();
}

std::string ExternalBlackBox::describe() const { return "external:" + command_; }

void ExternalBlackBox::spawn() {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw Error(ErrorCode::BlackBoxCrash, std::string("socketpair failed: ") + std::strerror(errno));
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw Error(ErrorCode::BlackBoxCrash, std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  pid_ = pid;
  fd_ = sv[0];
  buffer_.clear();

  std::string line;
  try {
    line = read_line(Clock::now() + timeout_);
  } catch (const Error& e) {
    throw Error(e.code(), std::string("during handshake: ") + e.what());
  }
  json hs;
  try {
    hs = json::parse(line);
  } catch (const json::exception&) {
    kill_child();
    throw Error(ErrorCode::BlackBoxProtocol, "handshake is not valid JSON");
  }
  if (!hs.is_object() || !hs.contains("v") || !hs["v"].is_number_integer()) {
    kill_child();
    throw Error(ErrorCode::BlackBoxProtocol, "handshake lacks an integer 'v' field");
  }
  if (hs["v"].get<int>() != kProtocolVersion) {
    kill_child();
    throw Error(ErrorCode::BlackBoxProtocol,
                "protocol version mismatch: child speaks v" + std::to_string(hs["v"].get<int>()) + ", expected v" +
                    std::to_string(kProtocolVersion));
  }
  handshake_ = std::move(hs);
}

void ExternalBlackBox::kill_child() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
  }
  buffer_.clear();
}

std::string ExternalBlackBox::read_line(Clock::time_point deadline) {
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) {
      kill_child();
      throw Error(ErrorCode::BlackBoxTimeout,
                  "no reply within " + std::to_string(timeout_.count()) + " ms; child killed");
    }
    pollfd p{fd_, POLLIN, 0};
    int rc = ::poll(&p, 1, static_cast<int>(left));
    if (rc < 0) {
      if (errno == EINTR) continue;
      kill_child();
      throw Error(ErrorCode::BlackBoxCrash, std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[4096];
    ssize_t n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
    }
    if (n <= 0) {
      // EOF: the child exited or closed its end.
      std::string why = "child closed the connection";
      int status = 0;
      if (pid_ > 0 && ::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        if (WIFEXITED(status))
          why = "child exited with status " + std::to_string(WEXITSTATUS(status));
        else if (WIFSIGNALED(status))
          why = "child killed by signal " + std::to_string(WTERMSIG(status));
      }
      const bool partial = !buffer_.empty();
      kill_child();
      if (partial) throw Error(ErrorCode::BlackBoxProtocol, "reply truncated before end of line (" + why + ")");
      throw Error(ErrorCode::BlackBoxCrash, why);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalBlackBox::write_line(const std::string& line) {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      kill_child();
      throw Error(ErrorCode::BlackBoxCrash, std::string("write to child failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

Trace ExternalBlackBox::evaluate(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "external black-box input is not finite");
  if (pid_ < 0) spawn();
  const std::uint64_t id = next_id_++;
  json req = {{"id", id}, {"x", std::vector<double>(x.begin(), x.end())}};
  write_line(req.dump());
  std::string line = read_line(Clock::now() + timeout_);
  try {
    return decode_reply(line, id);
  } catch (const Error& e) {
    // The stream may be out of sync after a bad reply.
    if (e.code() == ErrorCode::BlackBoxProtocol) kill_child();
    throw;
  }
}

Trace decode_reply(const std::string& line, std::uint64_t expected_id) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::BlackBoxProtocol, "reply is not valid JSON");
  }
  if (!j.is_object()) throw Error(ErrorCode::BlackBoxProtocol, "reply is not a JSON object");
  if (!j.contains("id") || !j["id"].is_number_unsigned() || j["id"].get<std::uint64_t>() != expected_id)
    throw Error(ErrorCode::BlackBoxProtocol, "reply id does not match request id " + std::to_string(expected_id));
  if (j.contains("error")) {
    std::string msg = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
    throw Error(ErrorCode::BlackBoxRemote, "simulator reported: " + msg);
  }
  if (!j.contains("dt") || !j["dt"].is_number()) throw Error(ErrorCode::BlackBoxProtocol, "reply lacks numeric 'dt'");
  const double dt = j["dt"].get<double>();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::BlackBoxProtocol, "reply 'dt' must be positive");
  if (!j.contains("channels") || !j["channels"].is_object() || j["channels"].empty())
    throw Error(ErrorCode::BlackBoxProtocol, "reply lacks a non-empty 'channels' object");
  Trace::ChannelMap ch;
  std::size_t len = 0;
  bool first = true;
  for (auto& [name, arr] : j["channels"].items()) {
    if (!arr.is_array() || arr.empty()) throw Error(ErrorCode::BlackBoxProtocol, "channel '" + name + "' is not a non-empty array");
    std::vector<double> v;
    v.reserve(arr.size());
    for (auto& e : arr) {
      if (!e.is_number()) throw Error(ErrorCode::BlackBoxProtocol, "channel '" + name + "' has a non-numeric sample");
      double d = e.get<double>();
      if (!std::isfinite(d)) throw Error(ErrorCode::BlackBoxProtocol, "channel '" + name + "' has a non-finite sample");
      v.push_back(d);
    }
    if (first) {
      len = v.size();
      first = false;
    } else if (v.size() != len) {
      throw Error(ErrorCode::BlackBoxProtocol, "channel '" + name + "' length " + std::to_string(v.size()) +
                                                   " differs from " + std::to_string(len));
    }
    ch.emplace(name, std::move(v));
  }
  try {
    return Trace(std::move(ch), dt);
  } catch (const Error& e) {
    throw Error(ErrorCode::BlackBoxProtocol, std::string("invalid trace: ") + e.what());
  }
}

}  // namespace stlad
