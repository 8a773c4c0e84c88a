#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbeval/detect_eval.hpp"
#include "wbeval/identify.hpp"

namespace wbeval::report {

inline constexpr std::string_view kToolName = "wbeval";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// 6 significant digits, ties to even (printf %.6g under the default
/// rounding mode). Non-finite values print as inf, -inf, nan.
std::string format_number(double v);

/// The value `format_number` prints, parsed back.
double round6(double v);

/// Rounded number, or the strings "inf"/"-inf"/"nan" for non-finite input.
nlohmann::json json_number(double v);

nlohmann::json to_json(const DetectionReport& r);
nlohmann::json to_json(const identify::TarAtFar& r);

/// Human-readable table of a detection report.
void write_summary(std::ostream& out, const DetectionReport& r);

enum class CurveKind { cmc, roc, open_set };

/// Two header lines (axis labels, then column names) followed by rows.
/// CMC: rank,accuracy. ROC: far,tar,threshold. Open set: fpir,fnir,threshold.
void write_curve_csv(std::ostream& out, const identify::Curve& curve, CurveKind kind);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes `doc` as pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// Record of a run: tool identity, configuration, and input digests.
nlohmann::json run_manifest(std::string_view command, const nlohmann::json& config,
                            const std::vector<std::filesystem::path>& inputs,
                            const std::vector<std::string>& outputs);

}  // namespace wbeval::report
