#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "herdmetric/cli.hpp"
#include "herdmetric/error.hpp"
#include "herdmetric/io.hpp"
#include "herdmetric/repro.hpp"
#include "herdmetric/svgplot.hpp"

using namespace herdmetric;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("herdmetric_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HERDMETRIC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_cli_capture(const std::string& args, const fs::path& tmp) {
  const fs::path out = tmp / "stdout.txt";
  const std::string cmd =
      std::string(HERDMETRIC_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  std::system(cmd.c_str());
  return io::read_text(out);
}

}  // namespace

TEST_CASE("pgm round trip quantizes to 8 bits") {
  TempDir tmp("pgm");
  std::vector<double> grid(16 * 8);
  Rng rng(3);
  for (double& c : grid) c = rng.uniform();
  io::write_pgm(tmp.path / "a.pgm", grid, 16, 8);

  int w = 0, h = 0;
  const auto back = io::read_pgm(tmp.path / "a.pgm", w, h);
  CHECK(w == 16);
  CHECK(h == 8);
  REQUIRE(back.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(back[i] - grid[i]) <= 0.5 / 255.0 + 1e-12);

  const std::string raw = io::read_text(tmp.path / "a.pgm");
  CHECK(raw.starts_with("P5\n16 8\n255\n"));
  CHECK(raw.size() == 12 + 16 * 8);
}

TEST_CASE("herd manifest persists and reloads the identical herd") {
  TempDir tmp("herd");
  coatgen::GrayScottParams gs;
  gs.steps = 600;
  const coatgen::Herd herd = coatgen::generate_herd(3, 20, 5, gs);
  io::write_herd(tmp.path / "herd", herd, false);
  CHECK(fs::exists(tmp.path / "herd" / "manifest.json"));
  CHECK(fs::exists(tmp.path / "herd" / "pgm" / "id000_000.pgm"));

  const coatgen::Herd loaded = io::load_herd(tmp.path / "herd");
  REQUIRE(loaded.instances.size() == herd.instances.size());
  for (std::size_t i = 0; i < herd.instances.size(); ++i) {
    CHECK(loaded.instances[i].grid == herd.instances[i].grid);
    CHECK(loaded.instances[i].identity_id == herd.instances[i].identity_id);
    CHECK(loaded.instances[i].source_tag == herd.instances[i].source_tag);
  }

  // writing twice produces byte-identical manifests
  io::write_herd(tmp.path / "herd2", herd, false);
  CHECK(io::read_text(tmp.path / "herd" / "manifest.json") ==
        io::read_text(tmp.path / "herd2" / "manifest.json"));
}

TEST_CASE("split documents survive the json round trip unchanged") {
  TempDir tmp("split");
  const coatgen::Herd herd = coatgen::generate_herd(5, 21, 6, {.steps = 500});
  const auto docs = dataset::make_split_documents(herd, {0.4}, 2, 6);
  for (const auto& doc : docs) {
    const fs::path p = tmp.path / cli::split_filename(doc.openset.ratio_index,
                                                      doc.openset.repetition_index);
    io::write_split(p, doc);
    const dataset::SplitDocument back = io::read_split(p);
    CHECK(back.openset.openness_ratio == doc.openset.openness_ratio);
    CHECK(back.openset.repetition_index == doc.openset.repetition_index);
    CHECK(back.openset.seed == doc.openset.seed);
    CHECK(back.openset.known == doc.openset.known);
    CHECK(back.openset.unknown == doc.openset.unknown);
    REQUIRE(back.classes.size() == doc.classes.size());
    for (std::size_t i = 0; i < doc.classes.size(); ++i) {
      CHECK(back.classes[i].identity_id == doc.classes[i].identity_id);
      CHECK(back.classes[i].train == doc.classes[i].train);
      CHECK(back.classes[i].val == doc.classes[i].val);
      CHECK(back.classes[i].test == doc.classes[i].test);
    }
  }
  CHECK_THROWS_AS(io::read_split(tmp.path / "missing.json"), DataError);
  io::write_text(tmp.path / "broken.json", "{nope");
  CHECK_THROWS_AS(io::read_split(tmp.path / "broken.json"), ParseError);
}

TEST_CASE("checkpoints restore the exact parameters, head and net config") {
  TempDir tmp("ckpt");
  embednet::NetConfig ncfg;
  ncfg.input_hw = 16;
  ncfg.widths = {2, 3, 4};
  ncfg.embed_dim = 12;
  embednet::EmbedNet net(ncfg);
  net.init_params(Rng(9));
  embednet::ClassHead head(12, 5);
  head.init_params(Rng(10));
  const std::vector<int> known = {2, 3, 5, 8, 13};

  io::write_checkpoint(tmp.path / "c.bin", net, &head, known);
  const io::Checkpoint ckpt = io::read_checkpoint(tmp.path / "c.bin");
  CHECK(ckpt.net_config.input_hw == 16);
  CHECK(ckpt.net_config.widths == ncfg.widths);
  CHECK(ckpt.net_config.embed_dim == 12);
  CHECK(ckpt.net_params == net.params());
  REQUIRE(ckpt.head_params.has_value());
  CHECK(*ckpt.head_params == head.params());
  CHECK(ckpt.known_ids == known);

  // headless variant
  io::write_checkpoint(tmp.path / "n.bin", net, nullptr, {});
  const io::Checkpoint plain = io::read_checkpoint(tmp.path / "n.bin");
  CHECK_FALSE(plain.head_params.has_value());

  // layout begins with a little-endian header length
  const std::string raw = io::read_text(tmp.path / "n.bin");
  std::uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i)
    hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
  CHECK(raw.substr(8, hlen).find("herdmetric-checkpoint") != std::string::npos);
  CHECK(raw.size() == 8 + hlen + net.params().size() * sizeof(double));
}

TEST_CASE("annotation files parse and reject malformed input") {
  TempDir tmp("ann");
  std::vector<detgeom::ImageAnnotations> anns(2);
  anns[0].image_id = "a";
  anns[0].boxes = {{{0, 0, 4, 4}, 0.75}};
  anns[1].image_id = "b";
  anns[1].boxes = {{{1, 1, 2, 2}, 0.5}, {{3, 3, 9, 9}, 0.25}};
  io::write_annotations(tmp.path / "d.json", anns);
  const auto back = io::read_annotations(tmp.path / "d.json");
  REQUIRE(back.size() == 2);
  CHECK(back[1].boxes.size() == 2);
  CHECK(back[0].boxes[0].confidence == 0.75);

  io::write_text(tmp.path / "bad.json", "[{\"image_id\": 3 4}]");
  CHECK_THROWS_AS(io::read_annotations(tmp.path / "bad.json"), ParseError);
  io::write_text(tmp.path / "obj.json", "{}");
  CHECK_THROWS_AS(io::read_annotations(tmp.path / "obj.json"), ParseError);
}

TEST_CASE("sweep csv and svg are well formed") {
  openset::SweepResult res;
  res.rows = {{"tl", 0.5, 0, 0.9, 0.5, 0.5}, {"tl", 0.5, 1, 0.8, 1.0, 0.0}};
  res.summary = {{"tl", 0.5, 0.85, 0.8, 0.9}, {"baseline", 0.5, 0.4, 0.3, 0.5}};
  const std::string csv = cli::results_csv(res.rows);
  CHECK(csv.starts_with("loss_kind,ratio,repetition,accuracy"));
  CHECK(csv.find("tl,0.5,0,0.900000") != std::string::npos);
  const std::string sum = cli::summary_csv(res.summary);
  CHECK(sum.find("85.00:[80.00;90.00]") != std::string::npos);

  const std::string svg = cli::sweep_svg(res);
  CHECK(svg.starts_with("<svg"));
  CHECK(svg.find("</svg>") != std::string::npos);
  // one polyline per loss kind
  std::size_t polylines = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1))
    ++polylines;
  CHECK(polylines == 2);
}

TEST_CASE("cli: generate is idempotent and validates its arguments") {
  TempDir tmp("cligen");
  const std::string herd_dir = (tmp.path / "herd").string();
  const std::string args = "generate --out " + herd_dir +
                           " --identities 3 --per-identity 20 --seed 4 --gs-steps 500";
  CHECK(run_cli(args) == 0);
  const std::string manifest1 = io::read_text(tmp.path / "herd" / "manifest.json");
  CHECK(run_cli(args) == 0);
  CHECK(io::read_text(tmp.path / "herd" / "manifest.json") == manifest1);

  // a single identity cannot provide negatives
  CHECK(run_cli("generate --out " + (tmp.path / "bad").string() + " --identities 1") == 2);
}

TEST_CASE("cli: det-eval prints AP with four decimals and maps errors to exit codes") {
  TempDir tmp("clidet");
  std::vector<detgeom::ImageAnnotations> gts(1), dets(1);
  gts[0].image_id = dets[0].image_id = "img";
  gts[0].boxes = {{{0, 0, 10, 10}, 1.0}, {{20, 20, 30, 30}, 1.0}};
  dets[0].boxes = {{{0, 0, 10, 10}, 0.9}, {{40, 40, 50, 50}, 0.8}, {{20, 20, 30, 30}, 0.7}};
  io::write_annotations(tmp.path / "gt.json", gts);
  io::write_annotations(tmp.path / "det.json", dets);

  const std::string out = run_cli_capture("det-eval --detections " +
                                              (tmp.path / "det.json").string() +
                                              " --ground-truth " +
                                              (tmp.path / "gt.json").string(),
                                          tmp.path);
  CHECK(out == "AP 0.8333\n");

  // perfect and empty detections
  io::write_annotations(tmp.path / "perfect.json", gts);
  CHECK(run_cli_capture("det-eval --detections " + (tmp.path / "perfect.json").string() +
                            " --ground-truth " + (tmp.path / "gt.json").string(),
                        tmp.path) == "AP 1.0000\n");
  std::vector<detgeom::ImageAnnotations> none(1);
  none[0].image_id = "img";
  io::write_annotations(tmp.path / "none.json", none);
  CHECK(run_cli_capture("det-eval --detections " + (tmp.path / "none.json").string() +
                            " --ground-truth " + (tmp.path / "gt.json").string(),
                        tmp.path) == "AP 0.0000\n");

  io::write_text(tmp.path / "broken.json", "[{]");
  CHECK(run_cli("det-eval --detections " + (tmp.path / "broken.json").string() +
                " --ground-truth " + (tmp.path / "gt.json").string()) == 3);

  const std::string pr = (tmp.path / "pr.svg").string();
  CHECK(run_cli("det-eval --detections " + (tmp.path / "det.json").string() +
                " --ground-truth " + (tmp.path / "gt.json").string() + " --plot " + pr) == 0);
  CHECK(io::read_text(pr).starts_with("<svg"));
}

TEST_CASE("cli: train/eval/plot round trip on a tiny herd") {
  TempDir tmp("clitrain");
  const std::string herd = (tmp.path / "herd").string();
  CHECK(run_cli("generate --out " + herd +
                " --identities 4 --per-identity 20 --seed 11 --gs-steps 1200") == 0);
  CHECK(run_cli("split --herd " + herd + " --out " + (tmp.path / "splits").string() +
                " --ratios 0.5 --reps 1 --seed 11") == 0);
  CHECK(fs::exists(tmp.path / "splits" / "split_ri00_rep00.json"));

  // unknown loss name is a usage error
  CHECK(run_cli("train --herd " + herd + " --split " +
                (tmp.path / "splits" / "split_ri00_rep00.json").string() + " --out " +
                (tmp.path / "run").string() + " --loss nope") == 2);

  CHECK(run_cli("train --herd " + herd + " --split " + (tmp.path / "splits").string() +
                " --ratio 0.5 --rep 0 --out " + (tmp.path / "run").string() +
                " --loss softmax-rtl --epochs 2 --batch-p 2") == 0);
  CHECK(fs::exists(tmp.path / "run" / "checkpoint.bin"));
  CHECK(fs::exists(tmp.path / "run" / "config.json"));
  const std::string log = io::read_text(tmp.path / "run" / "epochs.csv");
  CHECK(log.starts_with("epoch,train_loss,val_accuracy,wall_seconds\n"));
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);  // header + 2 epochs

  // momentum disabled is recorded for the rtl family
  CHECK(io::read_text(tmp.path / "run" / "config.json").find("\"momentum_enabled\": false") !=
        std::string::npos);

  const std::string eval_out =
      run_cli_capture("eval --herd " + herd + " --split " + (tmp.path / "splits").string() +
                          " --ratio 0.5 --rep 0 --checkpoint " +
                          (tmp.path / "run" / "checkpoint.bin").string() + " --out " +
                          (tmp.path / "eval.csv").string(),
                      tmp.path);
  CHECK(eval_out.find("accuracy") != std::string::npos);
  CHECK(io::read_text(tmp.path / "eval.csv")
            .starts_with("loss_kind,ratio,repetition,accuracy"));

  CHECK(run_cli("plot --herd " + herd + " --split " + (tmp.path / "splits").string() +
                " --ratio 0.5 --rep 0 --checkpoint " +
                (tmp.path / "run" / "checkpoint.bin").string() + " --out " +
                (tmp.path / "embed.svg").string()) == 0);
  CHECK(io::read_text(tmp.path / "embed.svg").starts_with("<svg"));
}

TEST_CASE("repro: forced failure still writes the full report and exits nonzero") {
  TempDir tmp("repro");
  repro::ReproOptions opts;
  opts.out_dir = tmp.path / "out";
  opts.seed = 3;
  opts.identities = 4;
  opts.per_identity = 24;
  opts.ratios = {0.5};
  opts.reps = 1;
  opts.epochs = 2;
  opts.kinds = {"baseline", "tl", "softmax-rtl"};
  opts.min_rtl_accuracy_pct = 1000.0;  // unattainable on purpose
  opts.train.batch_p = 2;

  const repro::ReproReport report = repro::run_repro(opts);
  CHECK(report.criteria.size() == 8);
  CHECK_FALSE(report.all_pass());
  bool c5_failed = false;
  for (const auto& c : report.criteria)
    if (c.index == 5) c5_failed = !c.pass;
  CHECK(c5_failed);
  CHECK(fs::exists(opts.out_dir / "report.md"));
  CHECK(fs::exists(opts.out_dir / "sweep" / "results.csv"));
  CHECK(fs::exists(opts.out_dir / "sweep" / "summary.csv"));
  CHECK(fs::exists(opts.out_dir / "sweep" / "sweep.svg"));
  CHECK(fs::exists(opts.out_dir / "embedding.svg"));
  const std::string md = io::read_text(opts.out_dir / "report.md");
  CHECK(md.find("overall: FAIL") != std::string::npos);
}

TEST_CASE("environment seed overrides the configured master seed") {
  TempDir tmp("envseed");
  const std::string a = (tmp.path / "a").string();
  const std::string b = (tmp.path / "b").string();
  const std::string base =
      " --identities 2 --per-identity 20 --seed 1 --gs-steps 400 --out ";
  CHECK(run_cli("generate" + base + a) == 0);
  const std::string cmd = std::string("HERDMETRIC_SEED=99 ") + HERDMETRIC_CLI_PATH +
                          " generate" + base + b + " >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  // the env seed produced a different herd than --seed 1
  CHECK(io::read_text(tmp.path / "a" / "manifest.json") !=
        io::read_text(tmp.path / "b" / "manifest.json"));
}
