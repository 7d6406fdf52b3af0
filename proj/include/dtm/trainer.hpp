#pragma once

#include <iosfwd>
#include <vector>

#include "dtm/config.hpp"
#include "dtm/dataset.hpp"
#include "dtm/params.hpp"

namespace dtm {

struct TrainStats {
  std::vector<double> epoch_loss;  // mean clip loss per epoch
  std::vector<double> epoch_lr;    // lr used during that epoch
  int steps = 0;                   // optimizer steps taken
};

// Teacher-forced clip training; one optimizer step per batch of clips.
// Writes "epoch,mean_loss,lr" CSV rows when csv_log is non-null. Aborts with
// NumericError on a non-finite loss.
TrainStats train_model(const Config& cfg, const std::vector<Sequence>& data,
                       ParamStore& params, std::ostream* csv_log);

// Semi-supervised protocol: the first mask is given and copied through; the
// remaining frames use predicted masks as memory. Returned masks include
// frame 1.
std::vector<Mask> infer_sequence(const Config& cfg, const ParamStore& params,
                                 const Sequence& seq);

void infer_dataset(const Config& cfg, const ParamStore& params,
                   const std::vector<Sequence>& data,
                   const std::filesystem::path& out_root);

// Central-difference check of the full training loss on a 2-frame 8x8 toy
// model with d=4. Returns the max relative error over all parameters.
double run_gradcheck(uint64_t seed, double eps);

}  // namespace dtm
