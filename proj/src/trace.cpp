#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "numfmt.hpp"
#include "stlad/error.hpp"
#include "stlad/trace.hpp"

namespace stlad {

Trace::Trace(ChannelMap channels, double dt, std::size_t length)
    : channels_(std::move(channels)), dt_(dt), length_(length) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorCode::InvalidArgument, "trace dt must be positive and finite");
  if (!channels_.empty()) length_ = channels_.begin()->second.size();
  if (length_ == 0) throw Error(ErrorCode::InvalidArgument, "trace must contain at least one sample");
  for (const auto& [name, values] : channels_) {
    if (values.size() != length_)
      throw Error(ErrorCode::InvalidArgument, "channel '" + name + "' has " +
                                                  std::to_string(values.size()) +
                                                  " samples, expected " + std::to_string(length_));
    for (double v : values)
      if (!std::isfinite(v))
        throw Error(ErrorCode::InvalidArgument, "channel '" + name + "' contains a non-finite value");
  }
}

bool Trace::has_channel(std::string_view name) const { return channels_.find(name) != channels_.end(); }

const std::vector<double>& Trace::channel(std::string_view name) const {
  auto it = channels_.find(name);
  if (it == channels_.end())
    throw Error(ErrorCode::InvalidArgument, "unknown channel '" + std::string(name) + "'");
  return it->second;
}

Trace Trace::with_value(std::string_view name, std::size_t step, double value) const {
  ChannelMap copy = channels_;
  auto it = copy.find(name);
  if (it == copy.end() || step >= length_)
    throw Error(ErrorCode::InvalidArgument, "no sample to replace");
  it->second[step] = value;
  return Trace(std::move(copy), dt_, length_);
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": '" + cell + "' is not a finite number");
  return v;
}

}  // namespace

Trace read_trace_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  double dt = 0.0;
  bool have_dt = false;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  int dt_column = -1;

  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::string body = trim(std::string_view(t).substr(1));
      if (body.rfind("dt", 0) == 0) {
        std::size_t sep = body.find_first_of("=:");
        if (sep == std::string::npos) throw Error(ErrorCode::Io, "malformed dt metadata line");
        dt = parse_cell(trim(std::string_view(body).substr(sep + 1)), line_no);
        have_dt = true;
      }
      continue;
    }
    auto cells = split_csv(t);
    if (header.empty()) {
      header = cells;
      columns.resize(header.size());
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i].empty()) throw Error(ErrorCode::Io, "empty channel name in CSV header");
        if (header[i] == "__dt") dt_column = static_cast<int>(i);
      }
      continue;
    }
    if (cells.size() != header.size())
      throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " cells, found " +
                                     std::to_string(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) columns[i].push_back(parse_cell(cells[i], line_no));
  }
  if (header.empty()) throw Error(ErrorCode::Io, "trace CSV has no header row");
  Trace::ChannelMap channels;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (static_cast<int>(i) == dt_column) {
      if (columns[i].empty()) throw Error(ErrorCode::Io, "trace CSV has no rows");
      dt = columns[i].front();
      have_dt = true;
      continue;
    }
    if (!channels.emplace(header[i], std::move(columns[i])).second)
      throw Error(ErrorCode::Io, "duplicate channel '" + header[i] + "'");
  }
  if (!have_dt) throw Error(ErrorCode::Io, "trace CSV declares no dt (use a __dt column or '# dt=' line)");
  return Trace(std::move(channels), dt);
}

Trace read_trace_jsonl(std::istream& in) {
  using nlohmann::json;
  std::string line;
  std::size_t line_no = 0;
  double dt = 0.0;
  bool have_dt = false;
  Trace::ChannelMap channels;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!it->is_number())
        throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": '" + it.key() + "' is not a number");
      double v = it->get<double>();
      if (it.key() == "__dt") {
        if (!have_dt) dt = v;
        have_dt = true;
        continue;
      }
      auto& col = channels[it.key()];
      if (col.size() != rows)
        throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": channel '" + it.key() +
                                       "' missing on an earlier line");
      col.push_back(v);
    }
    ++rows;
    for (const auto& [name, col] : channels)
      if (col.size() != rows)
        throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": channel '" + name + "' missing");
  }
  if (!have_dt) throw Error(ErrorCode::Io, "trace JSON lines declare no __dt");
  return Trace(std::move(channels), dt, rows);
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open trace file " + path.string());
  auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") return read_trace_jsonl(in);
  return read_trace_csv(in);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "__dt";
  for (const auto& [name, _] : trace.channels()) out << ',' << name;
  out << '\n';
  for (std::size_t t = 0; t < trace.length(); ++t) {
    out << detail::format_number(trace.dt());
    for (const auto& [_, values] : trace.channels()) out << ',' << detail::format_number(values[t]);
    out << '\n';
  }
}

}  // namespace stlad
