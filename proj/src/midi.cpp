#include "pianomime/midi.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace pianomime {
namespace {

struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  std::uint8_t u8() {
    if (pos >= bytes.size()) throw MidiParseError(pos, "unexpected end of data");
    return bytes[pos++];
  }

  std::uint32_t u16() {
    std::uint32_t v = u8();
    return (v << 8) | u8();
  }

  std::uint32_t u32() {
    std::uint32_t v = u16();
    return (v << 16) | u16();
  }

  // Variable-length quantity, at most 4 bytes per the SMF spec.
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    throw MidiParseError(pos - 1, "variable-length quantity longer than 4 bytes");
  }

  void expect_tag(const char* tag) {
    for (int i = 0; i < 4; ++i) {
      if (u8() != static_cast<std::uint8_t>(tag[i]))
        throw MidiParseError(pos - 1, std::string("expected chunk tag '") + tag + "'");
    }
  }

  void skip(std::size_t n) {
    if (pos + n > bytes.size()) throw MidiParseError(pos, "unexpected end of data");
    pos += n;
  }
};

struct RawNote {
  int key;
  long on_tick;
  long off_tick;
};

struct RawPedal {
  long tick;
  bool down;
};

struct TempoChange {
  long tick;
  double us_per_qn;
};

// Piecewise-linear tick -> seconds map built from tempo changes.
class TempoMap {
 public:
  TempoMap(std::vector<TempoChange> changes, int division) : division_(division) {
    std::stable_sort(changes.begin(), changes.end(),
                     [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
    double t = 0.0;
    long tick = 0;
    double us = 500000.0;  // SMF default: 120 bpm
    for (const auto& c : changes) {
      if (c.tick > tick) {
        t += static_cast<double>(c.tick - tick) * us / (1e6 * division_);
        tick = c.tick;
      }
      us = c.us_per_qn;
      anchors_.push_back({tick, t, us});
    }
    if (anchors_.empty() || anchors_.front().tick > 0) {
      anchors_.insert(anchors_.begin(), {0, 0.0, anchors_.empty() ? us : 500000.0});
    }
  }

  double seconds(long tick) const {
    const Anchor* a = &anchors_.front();
    for (const auto& cand : anchors_) {
      if (cand.tick <= tick) a = &cand;
      else break;
    }
    return a->t + static_cast<double>(tick - a->tick) * a->us_per_qn / (1e6 * division_);
  }

 private:
  struct Anchor {
    long tick;
    double t;
    double us_per_qn;
  };
  std::vector<Anchor> anchors_;
  int division_;
};

}  // namespace

MidiData parse_midi(std::span<const std::uint8_t> bytes) {
  Cursor c{bytes};
  c.expect_tag("MThd");
  const std::uint32_t hdr_len = c.u32();
  if (hdr_len < 6) throw MidiParseError(c.pos - 4, "header chunk shorter than 6 bytes");
  const std::uint32_t format = c.u16();
  if (format != 0 && format != 1)
    throw MidiParseError(c.pos - 2, "unsupported format " + std::to_string(format));
  const std::uint32_t ntrks = c.u16();
  if (format == 0 && ntrks != 1)
    throw MidiParseError(c.pos - 2, "format 0 file must contain exactly one track");
  const std::uint32_t division_raw = c.u16();
  if (division_raw & 0x8000)
    throw MidiParseError(c.pos - 2, "SMPTE time division is not supported");
  const int division = static_cast<int>(division_raw);
  if (division == 0) throw MidiParseError(c.pos - 2, "time division must be positive");
  c.skip(hdr_len - 6);

  std::vector<RawNote> notes;
  std::vector<RawPedal> pedals;
  std::vector<TempoChange> tempos;
  MidiData out;

  for (std::uint32_t trk = 0; trk < ntrks; ++trk) {
    c.expect_tag("MTrk");
    const std::uint32_t trk_len = c.u32();
    const std::size_t trk_end = c.pos + trk_len;
    if (trk_end > bytes.size())
      throw MidiParseError(c.pos - 4, "track length exceeds file size");

    long tick = 0;
    std::uint8_t running = 0;
    bool ended = false;
    // Open note-ons per MIDI note, matched first-in-first-out.
    std::map<int, std::vector<long>> open;

    while (c.pos < trk_end) {
      tick += static_cast<long>(c.vlq());
      std::uint8_t status = c.u8();
      if (status < 0x80) {
        if (running == 0)
          throw MidiParseError(c.pos - 1, "data byte without running status");
        status = running;
        --c.pos;
      }

      if (status == 0xFF) {
        const std::uint8_t type = c.u8();
        const std::uint32_t len = c.vlq();
        const std::size_t data_at = c.pos;
        if (type == 0x51) {
          if (len != 3) throw MidiParseError(data_at, "tempo meta event must carry 3 bytes");
          const std::uint32_t us = (std::uint32_t(c.u8()) << 16) | (std::uint32_t(c.u8()) << 8) | c.u8();
          if (us == 0) throw MidiParseError(data_at, "tempo of 0 microseconds per quarter");
          tempos.push_back({tick, static_cast<double>(us)});
        } else if (type == 0x2F) {
          c.skip(len);
          ended = true;
          break;
        } else {
          c.skip(len);
        }
        running = 0;
      } else if (status == 0xF0 || status == 0xF7) {
        const std::uint32_t len = c.vlq();
        c.skip(len);
        running = 0;
      } else if (status >= 0x80) {
        running = status;
        const std::uint8_t kind = status & 0xF0;
        switch (kind) {
          case 0x80:
          case 0x90: {
            const std::uint8_t note = c.u8();
            const std::uint8_t vel = c.u8();
            if (note & 0x80) throw MidiParseError(c.pos - 2, "note number out of range");
            const int key = int(note) - kMidiBase;
            if (key < 0 || key >= kNumKeys) {
              if (kind == 0x90 && vel > 0) ++out.ignored_notes;
              break;
            }
            if (kind == 0x90 && vel > 0) {
              open[key].push_back(tick);
            } else {
              auto it = open.find(key);
              if (it == open.end() || it->second.empty()) break;  // orphan note-off
              notes.push_back({key, it->second.front(), tick});
              it->second.erase(it->second.begin());
            }
            break;
          }
          case 0xB0: {
            const std::uint8_t ctrl = c.u8();
            const std::uint8_t val = c.u8();
            if (ctrl == 64) pedals.push_back({tick, val >= 64});
            break;
          }
          case 0xA0:
          case 0xE0:
            c.skip(2);
            break;
          case 0xC0:
          case 0xD0:
            c.skip(1);
            break;
          default:
            throw MidiParseError(c.pos - 1, "unknown status byte");
        }
      }
    }
    if (!ended && c.pos != trk_end)
      throw MidiParseError(c.pos, "track data overruns its declared length");
    c.pos = trk_end;

    for (auto& [key, ons] : open) {
      for (long on : ons) {
        notes.push_back({key, on, tick});
        ++out.unterminated_notes;
      }
    }
  }

  TempoMap tmap(std::move(tempos), division);
  for (const auto& n : notes) {
    out.events.push_back({n.key, tmap.seconds(n.on_tick), tmap.seconds(n.off_tick)});
  }
  for (const auto& p : pedals) out.pedal.push_back({tmap.seconds(p.tick), p.down});

  std::stable_sort(out.events.begin(), out.events.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return a.on != b.on ? a.on < b.on : a.key < b.key;
  });
  std::stable_sort(out.pedal.begin(), out.pedal.end(),
                   [](const PedalEvent& a, const PedalEvent& b) { return a.t < b.t; });
  return out;
}

MidiData parse_midi_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_midi(bytes);
}

}  // namespace pianomime
