#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "herdmetric/rng.hpp"

namespace herdmetric::coatgen {

inline constexpr int kPatternSize = 128;
inline constexpr int kInstanceSize = 64;

struct GrayScottParams {
  double Du = 0.16;
  double Dv = 0.08;
  double F = 0.060;
  double k = 0.062;
  double dt = 1.0;
  int steps = 5000;
  // Lattice the reaction-diffusion runs on; the result is upsampled to
  // kPatternSize. A coarse lattice is the feature-size knob: 32 gives the
  // broad blotches this generator needs so that identity survives the
  // crop/rotation augmentation.
  int sim_size = 32;
  // Initial-state perturbation; with patches = 0 and noise = 0 the
  // simulation starts from the uniform fixed point u=1, v=0.
  int init_patches = 8;
  double init_noise = 0.02;
};

// One synthetic identity: the converged, min-max normalized u field.
struct CoatPattern {
  std::vector<double> grid;  // kPatternSize^2, row-major, values in [0,1]
  int identity_id = 0;
  std::uint64_t seed = 0;
};

enum class SourceTag { A, B, C };
char source_tag_char(SourceTag t);
SourceTag parse_source_tag(char c);

// One augmented view of an identity, downsampled to kInstanceSize.
struct Instance {
  std::vector<double> grid;  // kInstanceSize^2, row-major, values in [0,1]
  int identity_id = 0;
  SourceTag source_tag = SourceTag::A;
  std::uint64_t augmentation_seed = 0;
};

struct Herd {
  int num_identities = 0;
  int instances_per_identity = 0;
  std::uint64_t master_seed = 0;
  GrayScottParams gs;
  std::vector<Instance> instances;  // grouped by identity, then instance index
  std::vector<std::uint64_t> pattern_seeds;  // one per identity
};

// Two-species update with periodic boundaries from a seeded perturbed
// initial state (u=1, v=0 plus random square perturbations and noise).
// Throws InstabilityError naming the step if any cell exceeds |10|.
CoatPattern gray_scott_simulate(const GrayScottParams& params, Rng rng);

// Sampled augmentation parameters; augment() draws them in this exact order
// from its rng, then consumes one normal draw per output cell (row-major)
// for the additive noise.
struct AugmentDraws {
  int quarter_turns = 0;        // uniform_int(4)
  double jitter_deg = 0.0;      // uniform(-10, 10)
  double area_fraction = 1.0;   // uniform(0.85, 1.0)
  int crop_x0 = 0;              // uniform_int(size - side + 1)
  int crop_y0 = 0;              // uniform_int(size - side + 1)
  double brightness = 1.0;      // uniform(0.8, 1.2)
  double noise_sigma = 0.02;
};

int crop_side_for(double area_fraction);

// rotation (bilinear, periodic wrap) -> crop -> downsample -> brightness ->
// noise, all clamped to [0,1].
Instance augment_with(const CoatPattern& pattern, const AugmentDraws& draws, Rng noise_rng);
Instance augment(const CoatPattern& pattern, Rng rng);

// Bilinear resample to n x n at pixel centers; the identity augmentation
// reduces to exactly this.
std::vector<double> downsample_to(const std::vector<double>& grid, int src, int dst);

// Deterministic per master_seed: identity i uses pattern seed
// mix(master, 1, i) and instance j uses augmentation seed mix(master, 2, i, j).
// Source tags cycle A, B, C by identity.
Herd generate_herd(int num_identities, int instances_per_identity, std::uint64_t master_seed,
                   const GrayScottParams& gs = {});

// Regenerates only the patterns (used by tests and exports).
CoatPattern pattern_for_identity(const Herd& herd, int identity_id);

}  // namespace herdmetric::coatgen
