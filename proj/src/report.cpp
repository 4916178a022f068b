#include "genckpt/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

namespace genckpt {

std::string human_bytes(std::uint64_t bytes) {
  static constexpr std::array<const char*, 5> units{"B", "KiB", "MiB", "GiB", "TiB"};
  double value = static_cast<double>(bytes);
  std::size_t unit = 0;
  while (value >= 1024.0 && unit + 1 < units.size()) {
    value /= 1024.0;
    ++unit;
  }
  char buf[32];
  if (unit == 0)
    std::snprintf(buf, sizeof(buf), "%llu B", static_cast<unsigned long long>(bytes));
  else
    std::snprintf(buf, sizeof(buf), "%.1f %s", value, units[unit]);
  return buf;
}

namespace {

std::string seconds_str(double s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", s);
  return buf;
}

}  // namespace

std::string render_report_table(const std::vector<ReportRow>& rows) {
  const std::vector<std::string> headers{"ckpt", "precious_s", "image_s", "precious",
                                         "image"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({std::to_string(r.checkpoint_index), seconds_str(r.precious_seconds),
                     seconds_str(r.image_seconds), human_bytes(r.precious_bytes),
                     human_bytes(r.image_bytes)});

  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << std::string(width[c] - row[c].size(), ' ') << row[c];
      out << (c + 1 == row.size() ? "\n" : "  ");
    }
  };
  emit(headers);
  for (const auto& row : cells) emit(row);
  return out.str();
}

std::string render_report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "checkpoint_index,precious_seconds,image_seconds,precious_bytes,image_bytes\n";
  for (const auto& r : rows)
    out << r.checkpoint_index << "," << r.precious_seconds << "," << r.image_seconds << ","
        << r.precious_bytes << "," << r.image_bytes << "\n";
  return out.str();
}

}  // namespace genckpt
