#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pianomime/piano_state.hpp"

namespace pianomime {

class MidiParseError : public std::runtime_error {
 public:
  MidiParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("midi parse error at byte " + std::to_string(offset) + ": " + what),
        offset(offset) {}
  std::size_t offset;
};

struct MidiData {
  std::vector<NoteEvent> events;   // sorted by (on, key)
  std::vector<PedalEvent> pedal;   // sorted by time
  int ignored_notes = 0;           // notes outside the 88-key range
  int unterminated_notes = 0;      // note-ons closed at track end
};

// Parses a Standard MIDI File (format 0 or 1). Tempo meta events from all
// tracks form one global tempo map; sustain is CC64 with value >= 64 meaning
// down. SMPTE time division is rejected. Malformed input raises
// MidiParseError carrying the byte offset of the problem.
MidiData parse_midi(std::span<const std::uint8_t> bytes);

MidiData parse_midi_file(const std::string& path);

}  // namespace pianomime
