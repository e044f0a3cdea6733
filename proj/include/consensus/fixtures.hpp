#pragma once

#include "consensus/scenario.hpp"

namespace consensus {

// Built-in demo scenarios with harmonic-oscillator agents
// (A = [[0,1],[-1,0]], B = [1;1]).

// Four agents, passive root 4, Theorem-2 design reproducing the classic
// gains K_1=[1.5,0.5], K_2=[4,0], K_3=[2.625,0.375] via explicit targets.
Scenario example1_scenario();

// Six agents, listening root 6 (in-neighbor 1), injected root-feedback gains
// K_1=[4,0], K_2=[2.625,0.375], K_3=K_4=[2.5,0.5], K_5=[1.5,0.5], K_6=[1,0].
Scenario example2_scenario();

// example2 with K_6 = 0: the remaining agents track the root's unforced
// oscillation.
Scenario example2_k6zero_scenario();

} // namespace consensus
