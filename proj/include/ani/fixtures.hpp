// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ani::fixtures {

/// A named program text with an optional policy text.
struct Fixture {
    std::string name;
    std::string program;
    std::string policy;
    std::string about;
};

/// x := 2*x*y*y with a private y.
inline const Fixture definite{"definite",
                              "var y : internal in [-4..4];\n"
                              "var x : observable in [-4..4];\n"
                              "begin\n"
                              "  x := 2 * x * y * y\n"
                              "end\n",
                              "phi = sign;\neta = id;\nrho = par;\n",
                              "output is always even; its parity leaks nothing"};

/// Copies a private value through a parity reduction, then overwrites both observables with constants.
inline const Fixture running{"running",
                             "var h1 : internal in [-4..4];\n"
                             "var h2 : internal in [-4..4];\n"
                             "var l1 : observable in [-4..4];\n"
                             "var l2 : observable in [-4..4];\n"
                             "begin\n"
                             "  h1 := h2;\n"
                             "  h2 := h2 mod 2;\n"
                             "  l1 := h2;\n"
                             "  l2 := h1;\n"
                             "  l2 := 5;\n"
                             "  l1 := l2 + 3\n"
                             "end\n",
                             "observe at 3, 4, end;\n",
                             "intermediate observables leak, final ones are constant"};

/// Releases the parity of h2 at the end and its full value at step 5.
inline const Fixture release{"release",
                             "var h1 : internal in [-4..4];\n"
                             "var h2 : internal in [-4..4];\n"
                             "var l1 : observable in [-4..4];\n"
                             "var l2 : observable in [-4..4];\n"
                             "begin\n"
                             "  h1 := h2;\n"
                             "  h2 := h2 mod 2;\n"
                             "  l1 := h2;\n"
                             "  h2 := h1;\n"
                             "  l2 := h2;\n"
                             "  l2 := l1\n"
                             "end\n",
                             "observe at 3, 5, end;\n",
                             "final observables equal the parity of h2; step 5 exposes h2"};

/// The same flow with an explicit declassification at step 3.
inline const Fixture declassified{"declassified",
                                  "var h1 : internal in [-4..4];\n"
                                  "var h2 : internal in [-4..4];\n"
                                  "var l1 : observable in [-4..4];\n"
                                  "var l2 : observable in [-4..4];\n"
                                  "begin\n"
                                  "  h1 := h2;\n"
                                  "  h2 := h2 mod 2;\n"
                                  "  l1 := declassify(h2);\n"
                                  "  h2 := h1;\n"
                                  "  l2 := h2;\n"
                                  "  l2 := l1\n"
                                  "end\n",
                                  "observe at 3, 5, 6;\n",
                                  "declassifies h2 at step 3; step 5 is safe only with accumulated knowledge"};

inline const Fixture copy{"copy",
                          "var h : internal in [-4..4];\n"
                          "var l : observable in [-4..4];\n"
                          "begin\n"
                          "  l := h\n"
                          "end\n",
                          "", "direct leak"};

inline const Fixture parity_leak{"parity-leak",
                                 "var h : internal in [-4..4];\n"
                                 "var l : observable in [0..1];\n"
                                 "begin\n"
                                 "  l := h mod 2\n"
                                 "end\n",
                                 "", "leaks exactly the parity of h"};

inline const Fixture skip{"skip",
                          "var h : internal in [-2..2];\n"
                          "var l : observable in [-2..2];\n"
                          "begin\n"
                          "  skip\n"
                          "end\n",
                          "", "does nothing"};

inline const Fixture branch{"branch",
                            "var h : internal in [-3..3];\n"
                            "var l : observable in [-3..3];\n"
                            "begin\n"
                            "  if h < 0 then { l := l + 1 } else { l := l - 1 };\n"
                            "  l := l * l\n"
                            "end\n",
                            "", "implicit flow through a guard"};

inline const Fixture countdown{"countdown",
                               "var h : internal in [0..3];\n"
                               "var l : observable in [0..3];\n"
                               "begin\n"
                               "  while 0 < h do { h := h - 1; l := l + 2 };\n"
                               "  l := l mod 2\n"
                               "end\n",
                               "", "loop whose trip count is secret; only the parity of l survives"};

inline const std::vector<const Fixture*>& all() {
    static const std::vector<const Fixture*> list{&definite, &running,    &release, &declassified, &copy,
                                                  &parity_leak, &skip, &branch,  &countdown};
    return list;
}

inline const Fixture& by_name(std::string_view name) {
    for (const auto* f : all())
        if (f->name == name) return *f;
    throw std::out_of_range("no fixture named '" + std::string(name) + "'");
}

}  // namespace ani::fixtures
