"""Exploration rewards from multiscale state entropy.

Episodic term: spread each episode's state-entropy score over its states as
a Markovian reward. Lifelong term: novelty against an append-only kNN graph
of every state ever visited, searched approximately in bounded time. Both
are combined after per-batch min-max normalization and drive a tabular
off-policy agent in desk-scale environments.
"""

from .agents import (AgentParams, QTable, ReplayBuffer, RewardMode, RunParams,
                     ScheduleConfig, Transition, epsilon_greedy, q_update,
                     run_element)
from .encoder import FixedEncoder, identity_encoder, new_encoder
from .entropy import (EntropyValue, EstimatorKind, GramMatrix, KernelConfig,
                      LogBase, gram_matrix, kde_entropy, kernel_sum_gap,
                      knn_entropy, renyi_matrix_entropy, subsample_states,
                      symmetric_eigenvalues)
from .envs import (Maze, PointMassWorld, bundled_maze, discretize, maze_load,
                   maze_step, pointmass_step)
from .errors import (ConfigError, DegenerateDistance, ElementError, EmptyGraph,
                     EmptyInput, InvalidArgument, NumericalFailure, ParseError)
from .knn_graph import (GraphNode, KnnGraph, SearchConfig, brute_force_knn,
                        gnns_search, gnns_search_batch, graph_insert,
                        graph_load, graph_new, graph_save, recall_at_k)
from .metrics import (CoverageCounter, EpisodeRecord, RunLog, coverage_update,
                      emit_csv, emit_heatmap, eval_episode_entropy, parse_csv)
from .rewards import (CombinedReward, EpisodicMode, EpisodicRewardTable,
                      EstimatorChoice, LifelongDistance, Normalization,
                      RewardConfig, assign_episodic_rewards, combine_rewards,
                      decomposition_loss, episode_entropy, lifelong_reward,
                      lifelong_rewards_batch, minmax_normalize,
                      optimal_reward_closed_form, upper_bound_loss)

__version__ = "0.1.0"
