#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace genckpt {

struct ReportRow {
  std::uint64_t checkpoint_index = 0;
  double precious_seconds = 0;
  double image_seconds = 0;
  std::uint64_t precious_bytes = 0;
  std::uint64_t image_bytes = 0;
};

/// Aligned plain-text table with a header line and human-readable sizes.
std::string render_report_table(const std::vector<ReportRow>& rows);

/// Machine-readable CSV with a header row.
std::string render_report_csv(const std::vector<ReportRow>& rows);

/// "1.5 GiB", "300 MiB", "17 B", ...
std::string human_bytes(std::uint64_t bytes);

}  // namespace genckpt
