#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pianomime {

// Tick-level event descriptions for the reference writer. The writer is a
// deliberately independent implementation used to synthesize parser inputs
// (tests, corpus generation); it shares no code with the parser.
struct TickNote {
  int key = 0;  // 0..87
  long on_tick = 0;
  long off_tick = 0;
};

struct TickTempo {
  long tick = 0;
  int us_per_qn = 500000;
};

struct TickPedal {
  long tick = 0;
  bool down = false;
};

// Serializes a Standard MIDI File. format 0 writes a single track; format 1
// writes the tempo map on track 0 and the notes and pedal on track 1.
std::vector<std::uint8_t> write_midi(std::span<const TickNote> notes,
                                     std::span<const TickTempo> tempos,
                                     std::span<const TickPedal> pedal,
                                     int division = 480, int format = 0);

}  // namespace pianomime
