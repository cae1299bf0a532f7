#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "herdmetric/coatgen.hpp"
#include "herdmetric/dataset.hpp"
#include "herdmetric/detgeom.hpp"
#include "herdmetric/embednet.hpp"

namespace herdmetric::io {

namespace fs = std::filesystem;

// 8-bit binary PGM (P5), one byte per cell, value = round(255 * cell).
void write_pgm(const fs::path& path, const std::vector<double>& grid, int w, int h);
std::vector<double> read_pgm(const fs::path& path, int& w, int& h);

// Herd manifest: generation parameters plus one entry per instance with its
// seeds and the relative PGM path. The seeds are canonical; loading a herd
// regenerates the grids from them.
void write_herd(const fs::path& dir, const coatgen::Herd& herd, bool export_patterns);
coatgen::Herd load_herd(const fs::path& manifest_path);

void write_split(const fs::path& path, const dataset::SplitDocument& doc);
dataset::SplitDocument read_split(const fs::path& path);

// Checkpoint layout, byte-exact:
//   [0..8)   uint64 little-endian: header length H
//   [8..8+H) UTF-8 JSON header: {"format":"herdmetric-checkpoint","version":1,
//            "net":{"input_hw","widths","embed_dim"},
//            "known_ids":[...] (present iff a head is stored),
//            "tensors":[{"name","count"},...]}
//   then, for each tensor in header order, `count` IEEE-754 doubles,
//   little-endian. Tensor order: "net.params", then optionally "head.params".
struct Checkpoint {
  embednet::NetConfig net_config;
  std::vector<double> net_params;
  std::optional<std::vector<double>> head_params;
  std::vector<int> known_ids;
};
void write_checkpoint(const fs::path& path, const embednet::EmbedNet& net,
                      const embednet::ClassHead* head, const std::vector<int>& known_ids);
Checkpoint read_checkpoint(const fs::path& path);

void write_epoch_log(const fs::path& path, const std::vector<embednet::EpochRow>& rows);

// Detection/annotation files: a JSON array of per-image objects
// {"image_id": str, "boxes": [{"x1","y1","x2","y2","confidence"?}, ...]}.
std::vector<detgeom::ImageAnnotations> read_annotations(const fs::path& path);
void write_annotations(const fs::path& path, const std::vector<detgeom::ImageAnnotations>& anns);

void write_text(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

std::string format_double(double v);

}  // namespace herdmetric::io
