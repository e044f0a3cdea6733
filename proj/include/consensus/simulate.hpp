#pragma once

#include <vector>

#include <Eigen/Dense>

#include "consensus/edge_transform.hpp"

namespace consensus {

// Trajectories sampled at t = 0, dt, ..., floor(T/dt)*dt. Agents and controls
// are stored in external agent order; edges in internal fundamental-edge
// order (the same layout agent_to_edge produces).
struct SimulationResult {
    Eigen::VectorXd times;
    Eigen::MatrixXd agents;          // samples x N*n
    Eigen::MatrixXd edges;           // samples x (N-1)*n
    Eigen::MatrixXd controls;        // samples x N*m
    Eigen::VectorXd consensusError;  // max pairwise ||x_i - x_j|| per sample
    int N = 0, n = 0, m = 0;

    Eigen::Index samples() const { return times.size(); }

    // State of external agent i at a sample row.
    Eigen::VectorXd agentState(Eigen::Index sample, int i) const {
        return agents.row(sample).segment(static_cast<Eigen::Index>(i - 1) * n, n);
    }
};

// Classical fixed-step RK4 integration of the closed-loop multi-agent system
// in agent coordinates under the protocol selected by gains.mode:
// FullNeighbor u_i = K_i sum_j w_ij (x_j - x_i); DstOnly
// u_i = K_i w_{i,k_i} (x_{k_i} - x_i) with u_root = 0; DstWithRootFeedback
// adds u_root = K_N w_{N,n_l} (x_{n_l} - x_root). x0 is in external agent
// order. Throws NonFiniteState when any state magnitude passes 1e12.
SimulationResult integrate_agents(const AgentDynamics& dyn, const Topology& topo,
                                  const SpanningTree& tree, const GainSet& gains,
                                  const std::vector<Eigen::VectorXd>& x0, double dt, double T);

// RK4 on the edge-coordinate system y' = M y; returns samples x dim(y0).
Eigen::MatrixXd integrate_edges(const Eigen::MatrixXd& M, const Eigen::VectorXd& y0, double dt,
                                double T);

// Consensus error sequence eps(t) = max over pairs of ||x_i(t) - x_j(t)||.
Eigen::VectorXd consensus_error(const SimulationResult& result);

// True iff eps(T) <= tol * (1 + eps(0)).
bool consensus_verdict(const SimulationResult& result, double tol);

} // namespace consensus
