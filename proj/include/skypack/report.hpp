#pragma once

#include "skypack/comms.hpp"
#include "skypack/harness.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skypack {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReportInput {
    std::vector<Metrics> methods;
    std::vector<Metrics> sweep;
    std::optional<AmortizationRecord> amortization;
};

nlohmann::json to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AmortizationRecord& a);
AmortizationRecord amortization_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReportInput& input);
ReportInput report_input_from_json(const nlohmann::json& j);

/// Fixed six-decimal formatting keeps the CSV byte-stable.
std::string metrics_csv(const std::vector<Metrics>& rows);

std::string svg_steps_vs_k(const std::vector<Metrics>& sweep);
std::string svg_reliability(const std::vector<Metrics>& methods);
std::string svg_amortization(const AmortizationRecord& record);

/// Writes metrics.csv, sweep.csv, results.json and the SVG plots into `dir`.
std::vector<std::string> emit_report(const ReportInput& input, const std::string& dir);

} // namespace skypack
