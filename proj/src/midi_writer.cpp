#include "pianomime/midi_writer.hpp"

#include <algorithm>
#include <stdexcept>

#include "pianomime/piano_state.hpp"

namespace pianomime {
namespace {

void put_u16(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back((x >> 8) & 0xFF);
  v.push_back(x & 0xFF);
}

void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back((x >> 24) & 0xFF);
  v.push_back((x >> 16) & 0xFF);
  v.push_back((x >> 8) & 0xFF);
  v.push_back(x & 0xFF);
}

void put_vlq(std::vector<std::uint8_t>& v, long value) {
  if (value < 0) throw std::invalid_argument("write_midi: negative delta time");
  std::uint32_t x = static_cast<std::uint32_t>(value);
  std::uint8_t stack[5];
  int n = 0;
  stack[n++] = x & 0x7F;
  while ((x >>= 7) != 0) stack[n++] = (x & 0x7F) | 0x80;
  while (n > 0) v.push_back(stack[--n]);
}

struct Timed {
  long tick;
  int order;  // tempo, pedal, note-off, note-on
  std::vector<std::uint8_t> bytes;
};

std::vector<std::uint8_t> render_track(std::vector<Timed> events, long end_tick) {
  std::stable_sort(events.begin(), events.end(), [](const Timed& a, const Timed& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
  });
  std::vector<std::uint8_t> body;
  long cursor = 0;
  for (const auto& e : events) {
    put_vlq(body, e.tick - cursor);
    cursor = e.tick;
    body.insert(body.end(), e.bytes.begin(), e.bytes.end());
  }
  put_vlq(body, std::max(0L, end_tick - cursor));
  body.push_back(0xFF);
  body.push_back(0x2F);
  body.push_back(0x00);

  std::vector<std::uint8_t> track;
  track.push_back('M');
  track.push_back('T');
  track.push_back('r');
  track.push_back('k');
  put_u32(track, static_cast<std::uint32_t>(body.size()));
  track.insert(track.end(), body.begin(), body.end());
  return track;
}

}  // namespace

std::vector<std::uint8_t> write_midi(std::span<const TickNote> notes,
                                     std::span<const TickTempo> tempos,
                                     std::span<const TickPedal> pedal,
                                     int division, int format) {
  if (format != 0 && format != 1) throw std::invalid_argument("write_midi: format must be 0 or 1");
  if (division <= 0 || division > 0x7FFF)
    throw std::invalid_argument("write_midi: division out of range");

  std::vector<Timed> tempo_events;
  for (const auto& t : tempos) {
    tempo_events.push_back(
        {t.tick, 0,
         {0xFF, 0x51, 0x03, static_cast<std::uint8_t>((t.us_per_qn >> 16) & 0xFF),
          static_cast<std::uint8_t>((t.us_per_qn >> 8) & 0xFF),
          static_cast<std::uint8_t>(t.us_per_qn & 0xFF)}});
  }

  std::vector<Timed> note_events;
  long end_tick = 0;
  for (const auto& n : notes) {
    if (n.key < 0 || n.key >= kNumKeys) throw std::invalid_argument("write_midi: key out of range");
    if (n.off_tick < n.on_tick) throw std::invalid_argument("write_midi: note off precedes on");
    const std::uint8_t midi_note = static_cast<std::uint8_t>(n.key + kMidiBase);
    note_events.push_back({n.on_tick, 3, {0x90, midi_note, 64}});
    note_events.push_back({n.off_tick, 2, {0x80, midi_note, 0}});
    end_tick = std::max(end_tick, n.off_tick);
  }
  for (const auto& p : pedal) {
    note_events.push_back({p.tick, 1, {0xB0, 64, static_cast<std::uint8_t>(p.down ? 127 : 0)}});
    end_tick = std::max(end_tick, p.tick);
  }
  for (const auto& t : tempos) end_tick = std::max(end_tick, t.tick);

  std::vector<std::uint8_t> out;
  out.push_back('M');
  out.push_back('T');
  out.push_back('h');
  out.push_back('d');
  put_u32(out, 6);
  put_u16(out, static_cast<std::uint32_t>(format));
  put_u16(out, format == 0 ? 1 : 2);
  put_u16(out, static_cast<std::uint32_t>(division));

  if (format == 0) {
    std::vector<Timed> all = std::move(tempo_events);
    all.insert(all.end(), note_events.begin(), note_events.end());
    const auto track = render_track(std::move(all), end_tick);
    out.insert(out.end(), track.begin(), track.end());
  } else {
    const auto t0 = render_track(std::move(tempo_events), end_tick);
    const auto t1 = render_track(std::move(note_events), end_tick);
    out.insert(out.end(), t0.begin(), t0.end());
    out.insert(out.end(), t1.begin(), t1.end());
  }
  return out;
}

}  // namespace pianomime
