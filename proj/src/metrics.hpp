#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace p3m::metrics {

// Whole-image and transition-area error metrics. SAD, GRAD and CONN follow
// the thousands convention (raw sums divided by 1000); MSE/MAD are plain
// means.
struct MetricReport {
    double sad = 0.0, mse = 0.0, mad = 0.0, grad = 0.0, conn = 0.0;
    double sad_t = 0.0, mse_t = 0.0, mad_t = 0.0;
};

double sad(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region);
double mse(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region);
double mad(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region);

// Sum of squared differences between gradient magnitudes computed with
// first-order Gaussian-derivative filters (sigma = 1.4, radius 4*sigma,
// reflect boundary), divided by 1000.
double grad(const AlphaMatte& pred, const AlphaMatte& gt);

// Connectivity error: thresholds 0.1 .. 1.0 in steps of 0.1; per pixel, the
// highest level at which it still belongs to the largest component shared by
// pred and gt defines its degree of connectedness; penalties of both mattes
// are compared and summed, divided by 1000.
double conn(const AlphaMatte& pred, const AlphaMatte& gt, int connectivity = 4);

// Full report; pred is resized bilinearly to the gt size if needed (with a
// warning on stderr). Transition metrics use transition_mask(trimap).
MetricReport evaluate(const AlphaMatte& pred, const AlphaMatte& gt, const Trimap& trimap);

// CSV with columns exactly: name,SAD,MSE,MAD,SAD-T,MSE-T,MAD-T,GRAD,CONN and
// a final MEAN row.
void write_report_csv(const std::string& path,
                      const std::vector<std::pair<std::string, MetricReport>>& rows,
                      const std::string& comment = "");

std::string report_csv_header();
std::string report_csv_row(const std::string& name, const MetricReport& r);
MetricReport mean_report(const std::vector<std::pair<std::string, MetricReport>>& rows);

}  // namespace p3m::metrics
