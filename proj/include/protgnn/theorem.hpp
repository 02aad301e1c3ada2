#pragma once

#include <vector>

#include "protgnn/model.hpp"

namespace protgnn {

// Executable check of the robustness guarantee: when every conditioned
// embedding stays near the shared embedding (in the delta-parameterized
// sense below), each class logit moves by at most m * ln((1+delta)(2-delta))
// between the plain and the conditioned forward, so a plain-forward margin
// above twice that keeps the predicted class unchanged.

struct PrototypePremise {
  int prototype_index = -1;
  int cls = -1;
  bool own_class = false;   // prototype belongs to the checked label
  double dist_cond = 0.0;   // ||h - h_cond|| for this prototype's reweighting
  double dist_proto = 0.0;  // ||h - p||
  double cond_bound = 0.0;  // allowed dist_cond given dist_proto and delta
  double radius_bound = 0.0;  // own class only: allowed dist_proto
  bool holds = false;
};

struct ClassDelta {
  int cls = -1;
  bool is_label = false;
  bool premises_hold = false;  // all premises of this class's prototypes
  double delta_logit = 0.0;    // conditioned logit minus plain logit
  double bound = 0.0;  // lower bound for the label class, upper bound otherwise
  bool bound_holds = false;  // checked only when premises_hold
};

struct TheoremReport {
  double delta = 0.0;
  int label = -1;
  int predicted_plain = -1;
  int predicted_conditioned = -1;
  double top2_gap = 0.0;   // plain logit of label minus best other class
  double threshold = 0.0;  // 2 m ln((1+delta)(2-delta))
  double logit_shift_cap = 0.0;  // m ln((1+delta)(2-delta))
  bool premises_hold = false;    // every prototype premise
  bool applicable = false;       // premises_hold and top2_gap > threshold
  bool bounds_hold = false;      // logit deltas within per-class bounds
  bool prediction_preserved = false;
  bool verdict = false;  // the implication itself, vacuously true when inapplicable
  std::vector<PrototypePremise> premises;
  std::vector<ClassDelta> class_deltas;
  std::vector<double> plain_logits;
  std::vector<double> conditioned_logits;
};

inline constexpr double kTheoremTolerance = 1e-9;

// Without a scorer the conditioned pass runs with all edge weights at one,
// which reproduces the plain embedding exactly.
TheoremReport check_theorem(const ModelState& model, const Instance& inst, int label, double delta);

struct TheoremScan {
  long instances = 0;
  long checks = 0;             // instance x delta pairs
  long premises_all_hold = 0;  // checks whose premises all held
  long applicable = 0;         // premises held and the margin cleared the threshold
  long bound_violations = 0;   // class deltas outside their bound despite premises
  long prediction_flips = 0;   // applicable checks whose argmax moved
  std::vector<double> deltas;
};

// Default grid scanned when the caller fixes no single delta.
std::vector<double> default_delta_grid();

TheoremScan scan_theorem(const ModelState& model, const std::vector<Instance>& instances,
                         const std::vector<int>& indices, const std::vector<double>& deltas);

}  // namespace protgnn
