# PRELUDE
import sys, pathlib
sys.path.append(str(pathlib.Path(__file__).parent.parent.parent))

# SEGMENT 1
from lagwurm import ModelLink, SyntheticModelSpec, simulate

spec = SyntheticModelSpec(
    N=3,
    links=(ModelLink(0, 1, 1, 0.6), ModelLink(1, 2, 2, -0.6)),
    autos=(0.5, 0.4, 0.0))
ds = simulate(spec, T=500).standardize()

# SEGMENT 2
from lagwurm import DiscoveryConfig, make_test, run_pcmci

cfg = DiscoveryConfig(tau_max=3, alpha_pc=0.2)
graph = run_pcmci(ds, cfg, make_test('parcorr'))

# SEGMENT 3
for target in range(ds.N):
    print(ds.names[target], graph.parents_of(target))

# SEGMENT 4
"""
X1 [(0, 1)]
X2 [(0, 1), (1, 1)]
X3 [(1, 2)]
"""
