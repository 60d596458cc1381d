// trace.hpp: timing traces, CSV ingestion, and summary statistics.
//
// A trace is the raw input of every analysis: convergence or settling times
// recorded in arrival order. Samples must be finite and nonnegative; the
// unit and source labels are opaque and carried into reports verbatim.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evtail/detail/numeric.hpp"
#include "evtail/errors.hpp"

namespace evtail {

class timing_trace {
 public:
  explicit timing_trace(std::vector<double> samples, std::string unit = "",
                        std::string source = "")
      : samples_(std::move(samples)), unit_(std::move(unit)), source_(std::move(source)) {
    if (samples_.empty()) throw empty_trace("timing_trace: no samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i]) || samples_[i] < 0.0)
        throw invalid_sample("timing_trace: sample " + std::to_string(i) +
                             " is negative or not finite");
    }
  }

  const std::vector<double>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  const std::string& unit() const { return unit_; }
  const std::string& source() const { return source_; }

 private:
  std::vector<double> samples_;
  std::string unit_;
  std::string source_;
};

struct trace_summary {
  std::size_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;  // population convention, divisor n
  double min = 0.0;
  double max = 0.0;
};

inline trace_summary summarize(const timing_trace& trace) {
  const auto& xs = trace.samples();
  trace_summary s;
  s.count = xs.size();
  double sum = 0.0;
  s.min = xs[0];
  s.max = xs[0];
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (double x : xs) {
    double d = x - s.mean;
    ss += d * d;
  }
  s.std_dev = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

// Maximum over the first n samples, the "observed worst case so far".
inline double max_prefix(const timing_trace& trace, std::size_t n) {
  if (n < 1 || n > trace.size())
    throw out_of_range("max_prefix: n = " + std::to_string(n) + " outside [1, " +
                       std::to_string(trace.size()) + "]");
  return *std::max_element(trace.samples().begin(), trace.samples().begin() + n);
}

// Identifies the trace column either by zero-based position or by header
// name. Parsing a plain integer string selects a position.
struct column_ref {
  std::optional<std::size_t> position;
  std::string name;

  static column_ref by_position(std::size_t i) {
    column_ref c;
    c.position = i;
    return c;
  }
  static column_ref by_name(std::string n) {
    column_ref c;
    c.name = std::move(n);
    return c;
  }
  static column_ref parse(const std::string& text) {
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos)
      return by_position(static_cast<std::size_t>(std::stoull(text)));
    return by_name(text);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

inline bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

// Loads one numeric column from a CSV file. Lines starting with '#' are
// comments; a header row is optional when the column is positional and
// required when it is named. Any blank, negative, or non-numeric cell in
// the selected column is a hard parse error with its 1-based row number.
inline timing_trace load_trace(const std::filesystem::path& path,
                               const column_ref& column = column_ref::by_position(0),
                               std::string unit = "", std::string source = "") {
  std::ifstream in(path);
  if (!in) throw file_not_found("load_trace: cannot open " + path.string());
  if (source.empty()) source = path.string();

  std::vector<double> samples;
  std::optional<std::size_t> col = column.position;
  bool first_content_line = true;
  std::string line;
  std::size_t row = 0;

  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3);
    std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;

    auto cells = detail::split_csv_line(line);

    if (first_content_line) {
      first_content_line = false;
      if (!col.has_value()) {
        // Named column: this line must be the header.
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i] == column.name) {
            col = i;
            break;
          }
        }
        if (!col.has_value())
          throw parse_error(row, "column '" + column.name + "' not found in header");
        continue;
      }
      // Positional column: treat an unparseable first line as a header.
      if (*col < cells.size()) {
        double probe;
        if (!detail::parse_double(cells[*col], probe)) continue;
      } else {
        continue;
      }
    }

    if (*col >= cells.size())
      throw parse_error(row, "column " + std::to_string(*col) + " out of range (row has " +
                                 std::to_string(cells.size()) + " cells)");
    const std::string& cell = cells[*col];
    if (cell.empty()) throw parse_error(row, "missing value");
    double value;
    if (!detail::parse_double(cell, value)) throw parse_error(row, "not a number: '" + cell + "'");
    if (!std::isfinite(value)) throw parse_error(row, "value is not finite");
    if (value < 0.0) throw parse_error(row, "negative value " + cell);
    samples.push_back(value);
  }

  if (samples.empty()) throw empty_trace("load_trace: no data rows in " + path.string());
  return timing_trace(std::move(samples), std::move(unit), std::move(source));
}

// Writes a trace in the same CSV dialect load_trace reads, one sample per
// row under a "time" header. Loading the written file reproduces the
// samples exactly.
inline void save_trace(const std::filesystem::path& path, const timing_trace& trace) {
  std::ofstream out(path);
  if (!out) throw file_not_found("save_trace: cannot open " + path.string() + " for writing");
  if (!trace.source().empty()) out << "# source: " << trace.source() << "\n";
  if (!trace.unit().empty()) out << "# unit: " << trace.unit() << "\n";
  out << "time\n";
  for (double x : trace.samples()) out << evtail::detail::format_double(x) << "\n";
  if (!out) throw file_not_found("save_trace: write failed for " + path.string());
}

}  // namespace evtail
