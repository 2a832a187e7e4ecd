#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lfopt/graph.hpp"

namespace lfopt {

// Deterministic CNN graphs matching the published layer sequence of each
// architecture at the given input resolution. Weight bytes are kernel
// parameter counts times bytes_per_element (no bias terms).
enum class Arch {
    vgg16,
    resnet18,
    resnet50,
    mobilenet_v2,
    squeezenet,
    se_branch_toy,
};

std::string_view to_string(Arch a);
Arch arch_from_string(std::string_view s); // throws UnsupportedArch

CompGraph make_fixture(Arch arch, int input_hw, int bytes_per_element = 2);

// "<arch>@<hw>", e.g. "mobilenet_v2@224". Used by dataset files to make
// sampled groups reconstructible.
std::string fixture_name(Arch arch, int input_hw);
CompGraph fixture_from_name(const std::string& name, int bytes_per_element = 2);

inline const std::vector<Arch>& all_arches() {
    static const std::vector<Arch> v{Arch::vgg16,        Arch::resnet18,   Arch::resnet50,
                                     Arch::mobilenet_v2, Arch::squeezenet, Arch::se_branch_toy};
    return v;
}

} // namespace lfopt
