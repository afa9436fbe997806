#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "longlens/error.hpp"
#include "longlens/raster/io.hpp"

namespace longlens::cli {

inline constexpr const char* kToolVersion = "longlens 0.3.0";

enum ExitCode : int { Success = 0, Fatal = 1, Partial = 2 };

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// JSON has no infinities; non-finite values are stored as strings.
inline Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(format_number(v)); }

inline Json optional_json(const std::optional<double>& v) { return v ? number_json(*v) : Json(nullptr); }

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  detail::write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

inline Json read_json(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions escaping fn
/// are rethrown on the calling thread (the one from the lowest index wins).
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::optional<std::size_t> err_index;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err_index || i < *err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const auto count = static_cast<std::size_t>(std::min<std::size_t>(jobs, n));
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// CSV: ',' separator, '.' decimals, LF endings, header row. Fields never
// contain separators here, so no quoting is done.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string csv_text(const CsvTable& t) {
  std::string s;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s.push_back(',');
      s += row[i];
    }
    s.push_back('\n');
  };
  emit(t.header);
  for (const auto& r : t.rows) emit(r);
  return s;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  CsvTable t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line == "\r") continue;
    if (first) {
      t.header = split(line, ',');
      first = false;
    } else {
      auto row = split(line, ',');
      if (row.size() != t.header.size()) throw FormatError(path.string() + ": ragged CSV row");
      t.rows.push_back(std::move(row));
    }
  }
  if (first) throw FormatError(path.string() + ": empty CSV");
  return t;
}

}  // namespace longlens::cli
