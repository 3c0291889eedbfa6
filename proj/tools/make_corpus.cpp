// Generates a synthetic demonstration corpus: for each song, a standard MIDI
// file, a pixel-space fingertip track as seen through a fixed projective
// camera, and the pixel<->keyboard correspondences needed to undo it.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pianomime/geometry.hpp"
#include "pianomime/hand_model.hpp"
#include "pianomime/pipeline.hpp"
#include "pianomime/retarget.hpp"
#include "pianomime/synth.hpp"

using namespace pianomime;

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic piano demonstration corpus"};
  std::string out_dir;
  int n_songs = 3;
  std::uint64_t seed = 7;
  int notes_per_hand = 6;
  std::string hand_spec_out;
  app.add_option("--out", out_dir, "corpus output directory")->required();
  app.add_option("--songs", n_songs, "number of songs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "base seed; song i uses seed+i");
  app.add_option("--notes-per-hand", notes_per_hand, "notes per hand per song")
      ->check(CLI::PositiveNumber);
  app.add_option("--hand-spec-out", hand_spec_out, "also write the default hand spec JSON here");
  CLI11_PARSE(app, argc, argv);

  try {
    HandModelSpec spec = HandModelSpec::default_spec();
    KeyGeometry geom = KeyGeometry::standard_piano();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    if (!hand_spec_out.empty()) spec.to_json_file(hand_spec_out);

    std::vector<std::string> ids;
    for (int i = 0; i < n_songs; ++i) {
      SynthConfig cfg;
      cfg.notes_per_hand = notes_per_hand;
      cfg.seed = seed + static_cast<std::uint64_t>(i);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "song_%02d", i);
      std::string id = buf;
      SynthSong song = synthesize_song(spec, geom, cfg, id);
      PixelScene scene = make_pixel_scene(geom, song.demo);

      fs::path dir = fs::path(out_dir) / id;
      fs::create_directories(dir);
      std::ofstream midi((dir / "song.mid").string(), std::ios::binary);
      if (!midi) throw std::runtime_error("cannot write " + (dir / "song.mid").string());
      midi.write(reinterpret_cast<const char*>(song.midi.data()),
                 static_cast<std::streamsize>(song.midi.size()));
      midi.close();
      write_fingertips_csv((dir / "demo_pixel.csv").string(), scene.pixel_frames, false);
      write_correspondences_csv((dir / "correspondences.csv").string(), scene.correspondences);
      ids.push_back(id);
    }
    CorpusLayout{out_dir}.write_manifest(ids);
    std::cout << nlohmann::json{{"out", out_dir}, {"songs", ids.size()}}.dump() << "\n";
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
