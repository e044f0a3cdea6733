#pragma once

#include <stdexcept>
#include <string>

namespace consensus {

// Base class for every error this library raises on purpose. Catching
// consensus::Error at the CLI boundary is enough to map any domain failure
// onto an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The digraph has no vertex from which every other vertex is reachable, so no
// directed spanning tree exists.
class NoSpanningTree : public Error {
public:
    using Error::Error;
};

// Matrix or vector operands whose sizes cannot be composed (A not square,
// B row count != n, weight matrix not N x N, state vector length mismatch...).
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Root-feedback protocol requested but the root has no incoming information
// edge, or the requested root neighbor is not actually a neighbor of the root.
class MissingRootPath : public Error {
public:
    using Error::Error;
};

// (A, B) fails the controllability rank test, so pole placement is impossible.
class Uncontrollable : public Error {
public:
    using Error::Error;
};

// A target pole set that cannot be realised by a real gain: wrong count, or
// complex targets not closed under conjugation.
class BadTargets : public Error {
public:
    using Error::Error;
};

// DstOnly design requested on a topology where the root has in-neighbors that
// would feed a root-feedback loop the caller said not to use. Raised only by
// operations whose contract requires a truly passive root.
class RootHasNeighbors : public Error {
public:
    using Error::Error;
};

// Simulation state left the finite range (divergence guard).
class NonFiniteState : public Error {
public:
    using Error::Error;
};

// A matrix expected to be built from square n x n blocks is not.
class NonSquareBlocks : public Error {
public:
    using Error::Error;
};

// Scenario file/JSON malformed; message carries the offending field path.
class InvalidScenario : public Error {
public:
    using Error::Error;
};

} // namespace consensus
