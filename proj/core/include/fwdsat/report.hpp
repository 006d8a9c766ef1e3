#pragma once

#include "fwdsat/design.hpp"
#include "fwdsat/predictor.hpp"
#include "fwdsat/simulate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fwdsat {

// Shortest decimal representation that round-trips the double.
std::string format_double(double v);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Trajectory CSV: header t,x1..xn,u,sampled[,d1..dl]; one row per grid point.
std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text);

// Prediction audit CSV for the delayed loop.
std::string predictions_to_csv(const std::vector<PredictionSample>& preds);

std::string gain_schedule_to_json(const GainSchedule& g);
GainSchedule gain_schedule_from_json(const std::string& text);

std::string certificates_to_json(const std::vector<Certificate>& certs);
std::string stability_report_to_json(const StabilityReport& rep);
std::string masp_result_to_json(double masp, double r_hi, std::size_t combos);
std::string delayed_report_to_json(const DelayedRunResult& run, double max_pred_err,
                                   std::size_t audited);
std::string error_record_to_json(const std::string& kind, const std::string& message,
                                 int exit_code);

} // namespace fwdsat
