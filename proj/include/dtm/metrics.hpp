#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dtm/mask.hpp"

namespace dtm {

// Region similarity |pred & gt| / |pred | gt|; 1.0 when both masks are empty.
double jaccard(const Mask& pred, const Mask& gt);

// Contour accuracy F = 2PR/(P+R). Boundary pixels are the mask minus its
// 4-connected erosion (outside the image counts as background); matches use
// Chebyshev distance <= tol. Both boundaries empty -> 1.0; P+R == 0 -> 0.0.
double boundary_f(const Mask& pred, const Mask& gt, double tol);

struct SeqStats {
  double mean = 0.0;
  double recall = 0.0;  // fraction of frames with score > threshold
  double decay = 0.0;   // mean(first quartile) - mean(last quartile)
};

// Requires >= 4 frames; quartile size is n/4 (integer division).
SeqStats sequence_stats(const std::vector<double>& scores, double threshold = 0.5);

struct SeqEval {
  std::string name;
  SeqStats j, f;
  double jf = 0.0;
};

struct EvalReport {
  std::vector<SeqEval> per_seq;  // lexicographic by sequence name
  SeqEval global;                // arithmetic mean of the per-sequence rows
};

// Compares <root>/<seq>/masks/%05d.pgm trees; frame 1 is excluded (its mask
// is given). The DAVIS-style tolerance is 0.8% of the image diagonal.
EvalReport evaluate(const std::filesystem::path& pred_root,
                    const std::filesystem::path& gt_root, double tol, bool davis_tol);

// Header: sequence,J_mean,J_recall,J_decay,F_mean,F_recall,F_decay,JF_mean
// plus a final GLOBAL row; 4 decimal places.
std::string report_csv(const EvalReport& report);
std::string global_row_csv(const EvalReport& report);

}  // namespace dtm
