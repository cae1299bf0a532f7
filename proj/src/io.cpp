#include "herdmetric/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "herdmetric/error.hpp"

namespace herdmetric::io {

using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, mode);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  return f;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw DataError("cannot open for reading: " + path.string());
  return f;
}

json parse_json_file(const fs::path& path) {
  std::ifstream f = open_in(path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_pgm(const fs::path& path, const std::vector<double>& grid, int w, int h) {
  if (grid.size() != static_cast<std::size_t>(w) * h)
    throw DimensionError("write_pgm: grid size does not match " + std::to_string(w) + "x" +
                         std::to_string(h));
  std::ofstream f = open_out(path, std::ios::binary);
  f << "P5\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> bytes(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = std::clamp(grid[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(255.0 * v));
  }
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write_pgm: short write to " + path.string());
}

std::vector<double> read_pgm(const fs::path& path, int& w, int& h) {
  std::ifstream f = open_in(path, std::ios::binary);
  std::string magic;
  int maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || w <= 0 || h <= 0)
    throw ParseError("read_pgm: " + path.string() + " is not an 8-bit P5 PGM");
  f.get();  // single whitespace after the header
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (f.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw ParseError("read_pgm: truncated pixel data in " + path.string());
  std::vector<double> grid(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) grid[i] = bytes[i] / 255.0;
  return grid;
}

namespace {

std::string instance_filename(int identity_id, int index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "pgm/id%03d_%03d.pgm", identity_id, index);
  return buf;
}

json gs_to_json(const coatgen::GrayScottParams& gs) {
  return json{{"Du", gs.Du},       {"Dv", gs.Dv},
              {"F", gs.F},         {"k", gs.k},
              {"dt", gs.dt},       {"steps", gs.steps}, {"sim_size", gs.sim_size},
              {"init_patches", gs.init_patches}, {"init_noise", gs.init_noise}};
}

coatgen::GrayScottParams gs_from_json(const json& j) {
  coatgen::GrayScottParams gs;
  gs.Du = j.at("Du");
  gs.Dv = j.at("Dv");
  gs.F = j.at("F");
  gs.k = j.at("k");
  gs.dt = j.at("dt");
  gs.steps = j.at("steps");
  gs.sim_size = j.at("sim_size");
  gs.init_patches = j.at("init_patches");
  gs.init_noise = j.at("init_noise");
  return gs;
}

}  // namespace

void write_herd(const fs::path& dir, const coatgen::Herd& herd, bool export_patterns) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "herdmetric-herd";
  manifest["version"] = 1;
  manifest["num_identities"] = herd.num_identities;
  manifest["instances_per_identity"] = herd.instances_per_identity;
  manifest["master_seed"] = herd.master_seed;
  manifest["gray_scott"] = gs_to_json(herd.gs);

  json entries = json::array();
  for (std::size_t idx = 0; idx < herd.instances.size(); ++idx) {
    const coatgen::Instance& inst = herd.instances[idx];
    const int within = static_cast<int>(idx) % herd.instances_per_identity;
    const std::string rel = instance_filename(inst.identity_id, within);
    write_pgm(dir / rel, inst.grid, coatgen::kInstanceSize, coatgen::kInstanceSize);
    entries.push_back(json{{"instance_id", idx},
                           {"identity_id", inst.identity_id},
                           {"source_tag", std::string(1, coatgen::source_tag_char(inst.source_tag))},
                           {"pattern_seed", herd.pattern_seeds[inst.identity_id]},
                           {"augmentation_seed", inst.augmentation_seed},
                           {"path", rel}});
  }
  manifest["instances"] = std::move(entries);

  if (export_patterns) {
    for (int id = 0; id < herd.num_identities; ++id) {
      const coatgen::CoatPattern p = coatgen::pattern_for_identity(herd, id);
      char buf[48];
      std::snprintf(buf, sizeof buf, "pgm/pattern%03d.pgm", id);
      write_pgm(dir / buf, p.grid, coatgen::kPatternSize, coatgen::kPatternSize);
    }
  }

  std::ofstream f = open_out(dir / "manifest.json");
  f << manifest.dump(2) << "\n";
}

coatgen::Herd load_herd(const fs::path& manifest_path) {
  const fs::path path =
      fs::is_directory(manifest_path) ? manifest_path / "manifest.json" : manifest_path;
  const json j = parse_json_file(path);
  if (j.value("format", "") != "herdmetric-herd")
    throw DataError(path.string() + ": not a herd manifest");
  const int num = j.at("num_identities");
  const int per = j.at("instances_per_identity");
  const std::uint64_t seed = j.at("master_seed");
  const coatgen::GrayScottParams gs = gs_from_json(j.at("gray_scott"));

  coatgen::Herd herd = coatgen::generate_herd(num, per, seed, gs);
  if (j.at("instances").size() != herd.instances.size())
    throw DataError(path.string() + ": instance count does not match the manifest seeds");
  return herd;
}

namespace {

json class_split_to_json(const dataset::ClassSplit& cs) {
  return json{{"id", cs.identity_id},
              {"source", std::string(1, coatgen::source_tag_char(cs.source_tag))},
              {"train", cs.train},
              {"val", cs.val},
              {"test", cs.test}};
}

dataset::ClassSplit class_split_from_json(const json& j) {
  dataset::ClassSplit cs;
  cs.identity_id = j.at("id");
  cs.source_tag = coatgen::parse_source_tag(j.at("source").get<std::string>().at(0));
  cs.train = j.at("train").get<std::vector<int>>();
  cs.val = j.at("val").get<std::vector<int>>();
  cs.test = j.at("test").get<std::vector<int>>();
  return cs;
}

}  // namespace

void write_split(const fs::path& path, const dataset::SplitDocument& doc) {
  json j;
  j["ratio"] = doc.openset.openness_ratio;
  j["ratio_index"] = doc.openset.ratio_index;
  j["repetition"] = doc.openset.repetition_index;
  j["seed"] = doc.openset.seed;
  j["known"] = doc.openset.known;
  j["unknown"] = doc.openset.unknown;
  json classes = json::array();
  for (const dataset::ClassSplit& cs : doc.classes) classes.push_back(class_split_to_json(cs));
  j["classes"] = std::move(classes);
  std::ofstream f = open_out(path);
  f << j.dump(2) << "\n";
}

dataset::SplitDocument read_split(const fs::path& path) {
  const json j = parse_json_file(path);
  dataset::SplitDocument doc;
  try {
    doc.openset.openness_ratio = j.at("ratio");
    doc.openset.ratio_index = j.at("ratio_index");
    doc.openset.repetition_index = j.at("repetition");
    doc.openset.seed = j.at("seed");
    doc.openset.known = j.at("known").get<std::vector<int>>();
    doc.openset.unknown = j.at("unknown").get<std::vector<int>>();
    for (const json& c : j.at("classes")) doc.classes.push_back(class_split_from_json(c));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return doc;
}

void write_checkpoint(const fs::path& path, const embednet::EmbedNet& net,
                      const embednet::ClassHead* head, const std::vector<int>& known_ids) {
  json header;
  header["format"] = "herdmetric-checkpoint";
  header["version"] = 1;
  header["net"] = json{{"input_hw", net.config().input_hw},
                       {"widths", net.config().widths},
                       {"embed_dim", net.config().embed_dim}};
  json tensors = json::array();
  tensors.push_back(json{{"name", "net.params"}, {"count", net.params().size()}});
  if (head) {
    header["known_ids"] = known_ids;
    tensors.push_back(json{{"name", "head.params"}, {"count", head->params().size()}});
  }
  header["tensors"] = std::move(tensors);
  const std::string htext = header.dump();

  std::ofstream f = open_out(path, std::ios::binary);
  const std::uint64_t hlen = htext.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((hlen >> (8 * i)) & 0xFF);
  f.write(lenbuf, 8);
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  auto write_doubles = [&](const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  write_doubles(net.params());
  if (head) write_doubles(head->params());
  if (!f) throw DataError("write_checkpoint: short write to " + path.string());
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream f = open_in(path, std::ios::binary);
  char lenbuf[8];
  f.read(lenbuf, 8);
  if (f.gcount() != 8) throw ParseError(path.string() + ": truncated checkpoint header");
  std::uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i)
    hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
  std::string htext(hlen, '\0');
  f.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (f.gcount() != static_cast<std::streamsize>(hlen))
    throw ParseError(path.string() + ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(htext);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (header.value("format", "") != "herdmetric-checkpoint")
    throw ParseError(path.string() + ": not a herdmetric checkpoint");

  Checkpoint ckpt;
  ckpt.net_config.input_hw = header.at("net").at("input_hw");
  const auto widths = header.at("net").at("widths").get<std::vector<int>>();
  if (widths.size() != 3) throw ParseError(path.string() + ": bad widths");
  std::copy(widths.begin(), widths.end(), ckpt.net_config.widths.begin());
  ckpt.net_config.embed_dim = header.at("net").at("embed_dim");
  if (header.contains("known_ids"))
    ckpt.known_ids = header.at("known_ids").get<std::vector<int>>();

  for (const json& t : header.at("tensors")) {
    const std::string name = t.at("name");
    const std::size_t count = t.at("count");
    std::vector<double> data(count);
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    if (f.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
      throw ParseError(path.string() + ": truncated tensor " + name);
    if (name == "net.params")
      ckpt.net_params = std::move(data);
    else if (name == "head.params")
      ckpt.head_params = std::move(data);
    else
      throw ParseError(path.string() + ": unknown tensor " + name);
  }
  return ckpt;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_epoch_log(const fs::path& path, const std::vector<embednet::EpochRow>& rows) {
  std::string out = "epoch,train_loss,val_accuracy,wall_seconds\n";
  char buf[128];
  for (const embednet::EpochRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.3f\n", r.epoch,
                  format_double(r.train_loss).c_str(), r.val_accuracy, r.wall_seconds);
    out += buf;
  }
  write_text(path, out);
}

std::vector<detgeom::ImageAnnotations> read_annotations(const fs::path& path) {
  const json j = parse_json_file(path);
  if (!j.is_array()) throw ParseError(path.string() + ": expected a JSON array of images");
  std::vector<detgeom::ImageAnnotations> out;
  try {
    for (const json& img : j) {
      detgeom::ImageAnnotations ann;
      ann.image_id = img.at("image_id");
      for (const json& b : img.at("boxes")) {
        detgeom::Detection det;
        det.box = {b.at("x1"), b.at("y1"), b.at("x2"), b.at("y2")};
        det.confidence = b.value("confidence", 1.0);
        ann.boxes.push_back(det);
      }
      out.push_back(std::move(ann));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

void write_annotations(const fs::path& path,
                       const std::vector<detgeom::ImageAnnotations>& anns) {
  json arr = json::array();
  for (const auto& a : anns) {
    json boxes = json::array();
    for (const auto& d : a.boxes)
      boxes.push_back(json{{"x1", d.box.x1},
                           {"y1", d.box.y1},
                           {"x2", d.box.x2},
                           {"y2", d.box.y2},
                           {"confidence", d.confidence}});
    arr.push_back(json{{"image_id", a.image_id}, {"boxes", std::move(boxes)}});
  }
  std::ofstream f = open_out(path);
  f << arr.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f = open_out(path, std::ios::binary);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw DataError("write_text: short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f = open_in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace herdmetric::io
