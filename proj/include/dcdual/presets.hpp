#pragma once

// Named optimizer settings.
//
// "default" gives the library defaults for a variant and problem kind. The
// "paper-<case>-<lp|qp>-<variant>" profiles carry the hyperparameters that
// were published for the IEEE 2000-, 4601- and 10000-bus test systems; they
// are meant for users who run those cases and carry no accuracy guarantee on
// other networks.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcdual/canonical.hpp"
#include "dcdual/optimizers.hpp"

namespace dcdual {

struct Preset {
  std::string_view name;
  ProblemKind kind;
  Variant variant;
  double alpha;
  double momentum;  // GDM
  double beta1;     // Adam
  double beta2;     // Adam
};

inline constexpr std::array<Preset, 18> kPaperPresets{{
    {"paper-2k-lp-adam", ProblemKind::LP, Variant::Adam, 500.0, 0.0, 0.9, 0.997},
    {"paper-2k-lp-adagrad", ProblemKind::LP, Variant::AdaGrad, 1500.0, 0.0, 0.0, 0.0},
    {"paper-2k-lp-gdm", ProblemKind::LP, Variant::Gdm, 0.601, 0.947, 0.0, 0.0},
    {"paper-2k-qp-adam", ProblemKind::QP, Variant::Adam, 500.0, 0.0, 0.9, 0.99},
    {"paper-2k-qp-adagrad", ProblemKind::QP, Variant::AdaGrad, 500.0, 0.0, 0.0, 0.0},
    {"paper-2k-qp-gdm", ProblemKind::QP, Variant::Gdm, 0.9, 0.9, 0.0, 0.0},
    {"paper-4601-lp-adam", ProblemKind::LP, Variant::Adam, 485.0, 0.0, 0.90, 0.96},
    {"paper-4601-lp-adagrad", ProblemKind::LP, Variant::AdaGrad, 2725.0, 0.0, 0.0, 0.0},
    {"paper-4601-lp-gdm", ProblemKind::LP, Variant::Gdm, 6.5, 0.94, 0.0, 0.0},
    {"paper-4601-qp-adam", ProblemKind::QP, Variant::Adam, 750.0, 0.0, 0.5, 0.999999},
    {"paper-4601-qp-adagrad", ProblemKind::QP, Variant::AdaGrad, 2250.0, 0.0, 0.0, 0.0},
    {"paper-4601-qp-gdm", ProblemKind::QP, Variant::Gdm, 2.21, 0.8, 0.0, 0.0},
    {"paper-10k-lp-adam", ProblemKind::LP, Variant::Adam, 496.0, 0.0, 0.9, 0.991},
    {"paper-10k-lp-adagrad", ProblemKind::LP, Variant::AdaGrad, 420.0, 0.0, 0.0, 0.0},
    {"paper-10k-lp-gdm", ProblemKind::LP, Variant::Gdm, 0.9, 0.99, 0.0, 0.0},
    {"paper-10k-qp-adam", ProblemKind::QP, Variant::Adam, 500.0, 0.0, 0.9, 0.997},
    {"paper-10k-qp-adagrad", ProblemKind::QP, Variant::AdaGrad, 1500.0, 0.0, 0.0, 0.0},
    {"paper-10k-qp-gdm", ProblemKind::QP, Variant::Gdm, 0.99, 0.99, 0.0, 0.0},
}};

inline constexpr double kDefaultDecay = 0.9995;

/// Library defaults, tuned on the bundled fixtures. Adam and GDM shrink the
/// step by kDefaultDecay every iteration; AdaGrad already scales its steps
/// down and runs without decay.
inline OptimizerConfig default_config(Variant variant, ProblemKind /*kind*/) {
  OptimizerConfig cfg;
  cfg.variant = variant;
  switch (variant) {
    case Variant::Adam:
      cfg.alpha = 13.0;
      cfg.beta1 = 0.9;
      cfg.beta2 = 0.999;
      cfg.decay = StepDecay{kDefaultDecay, 1};
      break;
    case Variant::AdaGrad:
      cfg.alpha = 130.0;
      break;
    case Variant::Gdm:
    case Variant::GdmClassic:
      cfg.alpha = 2.3;
      cfg.momentum = 0.9;
      cfg.decay = StepDecay{kDefaultDecay, 1};
      break;
  }
  cfg.tolerance = 1e-6;
  cfg.max_iters = 50000;
  return cfg;
}

inline std::optional<Preset> find_preset(std::string_view name) {
  for (const auto& p : kPaperPresets)
    if (p.name == name) return p;
  return std::nullopt;
}

/// Preset hyperparameters on top of the defaults. LP profiles run without
/// step decay; QP profiles decay by kDefaultDecay every iteration.
inline OptimizerConfig config_from_preset(const Preset& preset) {
  OptimizerConfig cfg = default_config(preset.variant, preset.kind);
  cfg.alpha = preset.alpha;
  if (uses_momentum(preset.variant)) cfg.momentum = preset.momentum;
  if (preset.variant == Variant::Adam) {
    cfg.beta1 = preset.beta1;
    cfg.beta2 = preset.beta2;
  }
  cfg.decay.reset();
  if (preset.kind == ProblemKind::QP) cfg.decay = StepDecay{kDefaultDecay, 1};
  return cfg;
}

inline std::vector<std::string_view> preset_names() {
  std::vector<std::string_view> names{"default"};
  for (const auto& p : kPaperPresets) names.push_back(p.name);
  return names;
}

}  // namespace dcdual
