// SPDX-License-Identifier: Apache-2.0
// Hand-scored text pairs. Expected values are worked out by hand from the
// match and chunk counts noted beside each pair, not computed by the library.
#pragma once

#include <array>
#include <string_view>

namespace golden {

struct TextCase {
  std::string_view candidate;
  std::string_view reference;
  double rouge_1;
  double meteor;
};

// METEOR with alpha 0.9, beta 3, gamma 0.5: Fmean = 10PR/(R+9P),
// penalty = 0.5 (chunks/matches)^3.
inline constexpr std::array<TextCase, 10> kTextCases = {{
    // m=4 ch=1: 1 - 0.5/64
    {"a b c d", "a b c d", 1.0, 0.9921875},
    // overlap {a,c}; m=2 ch=2: 2/3 * 0.5
    {"a b c", "a c d", 2.0 / 3.0, 1.0 / 3.0},
    // overlap 5 of 6 each side; m=5 ch=2: 5/6 * (1 - 0.5*0.064)
    {"the cat sat on the mat", "the cat is on the mat", 5.0 / 6.0, 5.0 / 6.0 * 0.968},
    {"", "a b", 0.0, 0.0},
    // case and punctuation vanish; m=2 ch=1: 1 - 0.5/8
    {"Dogs run!", "dogs RUN", 1.0, 0.9375},
    // clipped overlap 1, P=1/3 R=1; Fmean = (10/3)/4, penalty 0.5
    {"a a a", "a", 0.5, 5.0 / 12.0},
    {"x y z", "p q r", 0.0, 0.0},
    // reversed order: m=2 ch=2
    {"b a", "a b", 1.0, 0.5},
    // P=R=4/5; m=4 ch=2: 0.8 * (1 - 0.5/8)
    {"a b c d e", "a b x d e", 0.8, 0.75},
    // P=1 R=2/3; Fmean = 20/29; m=4 ch=2
    {"large building near road", "a large building near the road", 0.8, 20.0 / 29.0 * 0.9375},
}};

}  // namespace golden
