#include "dtm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dtm/errors.hpp"
#include "dtm/pgm.hpp"

namespace dtm {

namespace {

void require_same_dims(const Mask& a, const Mask& b, const char* what) {
  if (a.w != b.w || a.h != b.h)
    throw ShapeError(std::string(what) + ": mask dims disagree: " + std::to_string(a.w) + "x" +
                     std::to_string(a.h) + " vs " + std::to_string(b.w) + "x" +
                     std::to_string(b.h));
}

// Mask minus its 4-connected erosion; outside the image counts as 0.
std::vector<uint8_t> boundary_of(const Mask& m) {
  std::vector<uint8_t> b(m.v.size(), 0);
  for (int r = 0; r < m.h; ++r)
    for (int c = 0; c < m.w; ++c) {
      if (!m.at(r, c)) continue;
      const bool interior = r > 0 && m.at(r - 1, c) && r + 1 < m.h && m.at(r + 1, c) &&
                            c > 0 && m.at(r, c - 1) && c + 1 < m.w && m.at(r, c + 1);
      if (!interior) b[static_cast<size_t>(r) * m.w + c] = 1;
    }
  return b;
}

// Chebyshev dilation by an integer radius.
std::vector<uint8_t> dilate(const std::vector<uint8_t>& b, int w, int h, int radius) {
  if (radius <= 0) return b;
  std::vector<uint8_t> out(b.size(), 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!b[static_cast<size_t>(r) * w + c]) continue;
      for (int dr = -radius; dr <= radius; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= h) continue;
        for (int dc = -radius; dc <= radius; ++dc) {
          const int cc = c + dc;
          if (cc >= 0 && cc < w) out[static_cast<size_t>(rr) * w + cc] = 1;
        }
      }
    }
  return out;
}

int64_t count_on(const std::vector<uint8_t>& v) {
  int64_t n = 0;
  for (uint8_t x : v) n += x;
  return n;
}

int64_t count_matched(const std::vector<uint8_t>& pts, const std::vector<uint8_t>& region) {
  int64_t n = 0;
  for (size_t i = 0; i < pts.size(); ++i) n += pts[i] && region[i];
  return n;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d.pgm", t);
  return buf;
}

}  // namespace

double jaccard(const Mask& pred, const Mask& gt) {
  require_same_dims(pred, gt, "jaccard");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    inter += pred.v[i] && gt.v[i];
    uni += pred.v[i] || gt.v[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double boundary_f(const Mask& pred, const Mask& gt, double tol) {
  require_same_dims(pred, gt, "boundary_f");
  if (tol < 0.0) throw InputError("boundary_f: tolerance must be >= 0");
  const std::vector<uint8_t> pb = boundary_of(pred);
  const std::vector<uint8_t> gb = boundary_of(gt);
  const int64_t np = count_on(pb), ng = count_on(gb);
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const int radius = static_cast<int>(std::floor(tol));
  const std::vector<uint8_t> gb_region = dilate(gb, gt.w, gt.h, radius);
  const std::vector<uint8_t> pb_region = dilate(pb, pred.w, pred.h, radius);
  const double precision = static_cast<double>(count_matched(pb, gb_region)) / np;
  const double recall = static_cast<double>(count_matched(gb, pb_region)) / ng;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

SeqStats sequence_stats(const std::vector<double>& scores, double threshold) {
  const int n = static_cast<int>(scores.size());
  if (n < 4) throw InputError("sequence_stats: need at least 4 frames, got " + std::to_string(n));
  SeqStats s;
  double sum = 0.0;
  int above = 0;
  for (double v : scores) {
    sum += v;
    if (v > threshold) ++above;
  }
  s.mean = sum / n;
  s.recall = static_cast<double>(above) / n;
  const int q = n / 4;
  double first = 0.0, last = 0.0;
  for (int i = 0; i < q; ++i) first += scores[static_cast<size_t>(i)];
  for (int i = n - q; i < n; ++i) last += scores[static_cast<size_t>(i)];
  s.decay = first / q - last / q;
  return s;
}

EvalReport evaluate(const std::filesystem::path& pred_root,
                    const std::filesystem::path& gt_root, double tol, bool davis_tol) {
  if (!std::filesystem::is_directory(gt_root))
    throw IoError("not a directory: " + gt_root.string());
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(gt_root))
    if (entry.is_directory() && std::filesystem::is_directory(entry.path() / "masks"))
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw IoError("no sequences under " + gt_root.string());

  EvalReport rep;
  std::vector<std::string> missing;
  for (const std::string& name : names) {
    std::vector<double> js, fs;
    for (int t = 2;; ++t) {
      const std::filesystem::path gtp = gt_root / name / "masks" / frame_name(t);
      if (!std::filesystem::exists(gtp)) break;
      const std::filesystem::path prp = pred_root / name / "masks" / frame_name(t);
      if (!std::filesystem::exists(prp)) {
        missing.push_back(prp.string());
        continue;
      }
      const Mask gt = read_pgm_mask(gtp);
      const Mask pred = read_pgm_mask(prp);
      double frame_tol = tol;
      if (davis_tol)
        frame_tol = 0.008 * std::sqrt(static_cast<double>(gt.w) * gt.w +
                                      static_cast<double>(gt.h) * gt.h);
      js.push_back(jaccard(pred, gt));
      fs.push_back(boundary_f(pred, gt, frame_tol));
    }
    if (!missing.empty()) continue;
    SeqEval se;
    se.name = name;
    se.j = sequence_stats(js);
    se.f = sequence_stats(fs);
    se.jf = (se.j.mean + se.f.mean) / 2.0;
    rep.per_seq.push_back(se);
  }
  if (!missing.empty()) {
    std::string msg = "missing files:";
    for (const std::string& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }

  SeqEval g;
  g.name = "GLOBAL";
  const double n = static_cast<double>(rep.per_seq.size());
  for (const SeqEval& se : rep.per_seq) {
    g.j.mean += se.j.mean / n;
    g.j.recall += se.j.recall / n;
    g.j.decay += se.j.decay / n;
    g.f.mean += se.f.mean / n;
    g.f.recall += se.f.recall / n;
    g.f.decay += se.f.decay / n;
    g.jf += se.jf / n;
  }
  rep.global = g;
  return rep;
}

namespace {

std::string row_csv(const SeqEval& se) {
  return se.name + "," + fmt4(se.j.mean) + "," + fmt4(se.j.recall) + "," + fmt4(se.j.decay) +
         "," + fmt4(se.f.mean) + "," + fmt4(se.f.recall) + "," + fmt4(se.f.decay) + "," +
         fmt4(se.jf);
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::string out = "sequence,J_mean,J_recall,J_decay,F_mean,F_recall,F_decay,JF_mean\n";
  for (const SeqEval& se : report.per_seq) out += row_csv(se) + "\n";
  out += row_csv(report.global) + "\n";
  return out;
}

std::string global_row_csv(const EvalReport& report) { return row_csv(report.global); }

}  // namespace dtm
