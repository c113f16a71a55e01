#pragma once

#include <string>

#include "exsel/core.hpp"

namespace exsel {

// Prompt layout (LF line endings, one blank line between blocks):
//
//   Instruction: {instruction}\n\n        -- only when the sequence carries one
//   Input: {input}\nOutput: {output}\n\n  -- per exemplar, in sequence order
//   Input: {test}\nOutput:
//
// The layout is a wire contract; tests assert it byte-for-byte.

inline std::string render_exemplar_block(const Exemplar& e) {
  return "Input: " + e.input + "\nOutput: " + e.output;
}

// Everything before the test block; also the text that gets embedded in
// ordered-text mode.
inline std::string render_sequence_text(const ExemplarSequence& seq, const ExemplarPool& pool,
                                        const InstructionSet* instructions) {
  std::string out;
  if (seq.instruction_id()) {
    if (!instructions)
      throw Error("sequence carries an instruction but no instruction set was given");
    out += "Instruction: " + instructions->at(static_cast<size_t>(*seq.instruction_id())) + "\n\n";
  }
  for (const auto& id : seq.exemplar_ids()) out += render_exemplar_block(pool.by_id(id)) + "\n\n";
  return out;
}

inline std::string render_prompt(const ExemplarSequence& seq, const ExemplarPool& pool,
                                 const InstructionSet* instructions, const std::string& test_input) {
  return render_sequence_text(seq, pool, instructions) + "Input: " + test_input + "\nOutput:";
}

}  // namespace exsel
