#include "herdmetric/coatgen.hpp"

#include <algorithm>
#include <cmath>

#include "herdmetric/error.hpp"
#include "herdmetric/kernels.hpp"

namespace herdmetric::coatgen {

char source_tag_char(SourceTag t) {
  switch (t) {
    case SourceTag::A: return 'A';
    case SourceTag::B: return 'B';
    case SourceTag::C: return 'C';
  }
  return '?';
}

SourceTag parse_source_tag(char c) {
  switch (c) {
    case 'A': return SourceTag::A;
    case 'B': return SourceTag::B;
    case 'C': return SourceTag::C;
    default: throw ParseError(std::string("unknown source tag '") + c + "'");
  }
}

namespace {
double sample_wrap_grid(const std::vector<double>& g, int n, double y, double x);
}

CoatPattern gray_scott_simulate(const GrayScottParams& params, Rng rng) {
  if (params.Du <= 0 || params.Dv <= 0 || params.F <= 0 || params.k <= 0 ||
      params.dt <= 0 || params.steps < 1)
    throw ConfigError("gray_scott_simulate: parameters must be positive, steps >= 1");
  if (params.sim_size < 8 || params.sim_size > kPatternSize)
    throw ConfigError("gray_scott_simulate: sim_size must lie in [8, 128]");

  const int n = params.sim_size;
  std::vector<double> u(n * n, 1.0), v(n * n, 0.0);

  // Seeded perturbation: a handful of square patches pushed toward the
  // reactive state, then low-amplitude noise everywhere. Patches scale with
  // the lattice so the reaction reliably ignites on coarse grids.
  const int half = std::max(2, n / 8);
  for (int p = 0; p < params.init_patches; ++p) {
    const int cy = static_cast<int>(rng.uniform_int(n));
    const int cx = static_cast<int>(rng.uniform_int(n));
    for (int dy = -half; dy < half; ++dy) {
      for (int dx = -half; dx < half; ++dx) {
        const int y = (cy + dy + n) % n;
        const int x = (cx + dx + n) % n;
        u[y * n + x] = 0.50;
        v[y * n + x] = 0.25;
      }
    }
  }
  if (params.init_noise > 0.0) {
    for (int i = 0; i < n * n; ++i) u[i] += rng.uniform(-params.init_noise, params.init_noise);
    for (int i = 0; i < n * n; ++i)
      v[i] = std::max(0.0, v[i] + rng.uniform(-params.init_noise, params.init_noise));
  }

  std::vector<double> un(n * n), vn(n * n);
  const kernels::GsRates rates{params.Du, params.Dv, params.F, params.k, params.dt};
  for (int step = 0; step < params.steps; ++step) {
    kernels::gray_scott_step(u.data(), v.data(), un.data(), vn.data(), n, n, rates);
    u.swap(un);
    v.swap(vn);
    if ((step & 0xFF) == 0xFF || step + 1 == params.steps) {
      for (int i = 0; i < n * n; ++i) {
        if (!(std::abs(u[i]) <= 10.0) || !(std::abs(v[i]) <= 10.0))
          throw InstabilityError("gray_scott_simulate: field diverged at step " +
                                 std::to_string(step));
      }
    }
  }

  double lo = u[0], hi = u[0];
  for (double x : u) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::vector<double> norm(n * n);
  if (hi - lo < 1e-12) {
    // Uniform field (e.g. the unperturbed fixed point): nothing to stretch.
    for (int i = 0; i < n * n; ++i) norm[i] = std::clamp(u[i], 0.0, 1.0);
  } else {
    for (int i = 0; i < n * n; ++i) norm[i] = (u[i] - lo) / (hi - lo);
  }

  CoatPattern out;
  if (n == kPatternSize) {
    out.grid = std::move(norm);
  } else {
    // Periodic bilinear upsample keeps the pattern seamless under wrap.
    out.grid.resize(static_cast<std::size_t>(kPatternSize) * kPatternSize);
    const double scale = static_cast<double>(n) / kPatternSize;
    for (int y = 0; y < kPatternSize; ++y)
      for (int x = 0; x < kPatternSize; ++x)
        out.grid[y * kPatternSize + x] =
            sample_wrap_grid(norm, n, (y + 0.5) * scale - 0.5, (x + 0.5) * scale - 0.5);
  }
  return out;
}

namespace {

// Bilinear sample with periodic wrap, pixel-center convention.
double sample_wrap_grid(const std::vector<double>& g, int n, double y, double x) {
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double ty = y - fy;
  const double tx = x - fx;
  const int y0 = ((static_cast<int>(fy) % n) + n) % n;
  const int x0 = ((static_cast<int>(fx) % n) + n) % n;
  const int y1 = (y0 + 1) % n;
  const int x1 = (x0 + 1) % n;
  const double a = g[y0 * n + x0] * (1 - tx) + g[y0 * n + x1] * tx;
  const double b = g[y1 * n + x0] * (1 - tx) + g[y1 * n + x1] * tx;
  return a * (1 - ty) + b * ty;
}

// Bilinear sample with edge clamp, for crops.
double sample_clamp(const std::vector<double>& g, int n, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(n - 1));
  x = std::clamp(x, 0.0, static_cast<double>(n - 1));
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, n - 1);
  const int x1 = std::min(x0 + 1, n - 1);
  const double ty = y - y0;
  const double tx = x - x0;
  const double a = g[y0 * n + x0] * (1 - tx) + g[y0 * n + x1] * tx;
  const double b = g[y1 * n + x0] * (1 - tx) + g[y1 * n + x1] * tx;
  return a * (1 - ty) + b * ty;
}

std::vector<double> rotate_wrap(const std::vector<double>& g, int n, double degrees) {
  if (degrees == 0.0) return g;
  const double rad = degrees * 3.14159265358979323846 / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double cy = (n - 1) / 2.0;
  std::vector<double> out(n * n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      // Inverse map: rotate the target coordinate back into the source.
      const double dy = y - cy;
      const double dx = x - cy;
      const double sy = cy + (s * dx + c * dy);
      const double sx = cy + (c * dx - s * dy);
      out[y * n + x] = sample_wrap_grid(g, n, sy, sx);
    }
  }
  return out;
}

}  // namespace

int crop_side_for(double area_fraction) {
  const int side = static_cast<int>(std::lround(kPatternSize * std::sqrt(area_fraction)));
  return std::clamp(side, 1, kPatternSize);
}

std::vector<double> downsample_to(const std::vector<double>& grid, int src, int dst) {
  std::vector<double> out(static_cast<std::size_t>(dst) * dst);
  const double scale = static_cast<double>(src) / dst;
  for (int y = 0; y < dst; ++y) {
    for (int x = 0; x < dst; ++x) {
      const double sy = (y + 0.5) * scale - 0.5;
      const double sx = (x + 0.5) * scale - 0.5;
      out[y * dst + x] = sample_clamp(grid, src, sy, sx);
    }
  }
  return out;
}

Instance augment_with(const CoatPattern& pattern, const AugmentDraws& draws, Rng noise_rng) {
  const int n = kPatternSize;
  if (pattern.grid.size() != static_cast<std::size_t>(n) * n)
    throw DimensionError("augment: pattern grid must be 128x128");

  const double angle = 90.0 * draws.quarter_turns + draws.jitter_deg;
  std::vector<double> rotated = rotate_wrap(pattern.grid, n, angle);

  const int side = crop_side_for(draws.area_fraction);
  std::vector<double> crop(static_cast<std::size_t>(side) * side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      crop[y * side + x] = rotated[(draws.crop_y0 + y) * n + (draws.crop_x0 + x)];

  Instance inst;
  inst.grid = downsample_to(crop, side, kInstanceSize);
  inst.identity_id = pattern.identity_id;
  for (double& c : inst.grid) c = std::clamp(c * draws.brightness, 0.0, 1.0);
  if (draws.noise_sigma > 0.0) {
    for (double& c : inst.grid)
      c = std::clamp(c + noise_rng.normal(0.0, draws.noise_sigma), 0.0, 1.0);
  }
  return inst;
}

Instance augment(const CoatPattern& pattern, Rng rng) {
  AugmentDraws d;
  d.quarter_turns = static_cast<int>(rng.uniform_int(4));
  d.jitter_deg = rng.uniform(-10.0, 10.0);
  d.area_fraction = rng.uniform(0.85, 1.0);
  const int side = crop_side_for(d.area_fraction);
  d.crop_x0 = static_cast<int>(rng.uniform_int(kPatternSize - side + 1));
  d.crop_y0 = static_cast<int>(rng.uniform_int(kPatternSize - side + 1));
  d.brightness = rng.uniform(0.8, 1.2);
  d.noise_sigma = 0.02;
  Instance inst = augment_with(pattern, d, rng);
  inst.augmentation_seed = 0;  // filled by generate_herd
  return inst;
}

Herd generate_herd(int num_identities, int instances_per_identity,
                   std::uint64_t master_seed, const GrayScottParams& gs) {
  if (num_identities < 2)
    throw ConfigError("generate_herd: need at least 2 identities, got " +
                      std::to_string(num_identities));
  if (instances_per_identity < 20)
    throw ConfigError("generate_herd: need at least 20 instances per identity, got " +
                      std::to_string(instances_per_identity));

  Herd herd;
  herd.num_identities = num_identities;
  herd.instances_per_identity = instances_per_identity;
  herd.master_seed = master_seed;
  herd.gs = gs;
  herd.pattern_seeds.resize(num_identities);
  herd.instances.resize(static_cast<std::size_t>(num_identities) * instances_per_identity);

  for (int id = 0; id < num_identities; ++id) {
    herd.pattern_seeds[id] = seed_mix(master_seed, 1, static_cast<std::uint64_t>(id));
    CoatPattern pattern = gray_scott_simulate(gs, Rng(herd.pattern_seeds[id]));
    pattern.identity_id = id;
    pattern.seed = herd.pattern_seeds[id];
    const SourceTag tag = static_cast<SourceTag>(id % 3);
    for (int j = 0; j < instances_per_identity; ++j) {
      const std::uint64_t aug_seed = seed_mix(master_seed, 2, static_cast<std::uint64_t>(id),
                                              static_cast<std::uint64_t>(j));
      Instance inst = augment(pattern, Rng(aug_seed));
      inst.source_tag = tag;
      inst.augmentation_seed = aug_seed;
      herd.instances[static_cast<std::size_t>(id) * instances_per_identity + j] =
          std::move(inst);
    }
  }
  return herd;
}

CoatPattern pattern_for_identity(const Herd& herd, int identity_id) {
  if (identity_id < 0 || identity_id >= herd.num_identities)
    throw ValidationError("pattern_for_identity: identity " +
                          std::to_string(identity_id) + " out of range");
  CoatPattern p = gray_scott_simulate(herd.gs, Rng(herd.pattern_seeds[identity_id]));
  p.identity_id = identity_id;
  p.seed = herd.pattern_seeds[identity_id];
  return p;
}

}  // namespace herdmetric::coatgen
