#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stlad {

/// A uniformly sampled multivariate signal. Every channel has the same
/// length and samples are dt seconds apart.
class Trace {
 public:
  using ChannelMap = std::map<std::string, std::vector<double>, std::less<>>;

  /// `length` is only consulted when `channels` is empty.
  Trace(ChannelMap channels, double dt, std::size_t length = 0);

  double dt() const noexcept { return dt_; }
  std::size_t length() const noexcept { return length_; }
  double duration() const noexcept { return dt_ * static_cast<double>(length_ - 1); }

  bool has_channel(std::string_view name) const;
  const std::vector<double>& channel(std::string_view name) const;
  const ChannelMap& channels() const noexcept { return channels_; }

  /// Copy of this trace with one sample replaced.
  Trace with_value(std::string_view name, std::size_t step, double value) const;

  bool operator==(const Trace& other) const = default;

 private:
  ChannelMap channels_;
  double dt_;
  std::size_t length_;
};

/// CSV with a header row of channel names. dt comes from a `__dt` column or
/// from a leading `# dt=<seconds>` line.
Trace read_trace_csv(std::istream& in);

/// One JSON object per line mapping channel name to value; dt is read from
/// the `__dt` key of the first object.
Trace read_trace_jsonl(std::istream& in);

/// Dispatches on extension: `.jsonl`/`.ndjson` are JSON lines, anything else CSV.
Trace load_trace(const std::filesystem::path& path);

void write_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace stlad
