from .genome import (
    ConnectionGene,
    Genome,
    InnovationRegistry,
    MutationRates,
    Network,
    NodeGene,
    StructureError,
    activate,
    compatibility_distance,
    creates_cycle,
    crossover,
    initial_genome,
    is_acyclic,
    mutate,
)
from .population import EvoConfig, EvolutionResult, GenerationStats, Species, evolve, reproduce, speciate
