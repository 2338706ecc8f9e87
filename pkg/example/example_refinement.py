import os
import matplotlib.pyplot as plt
from dynpatterns import config as config_lib
from dynpatterns import pipeline

"""
Fix the window duration and refine the sampling: each rung doubles both the number of windows N and
the samples per window R. The leading nontrivial eigenvalue should settle.
"""

base = config_lib.make_config('torus-model-1', {'flow': {'n_samples': 500}, 'window': {'R': 10},
                                                'geometry': {'knn': None}, 'spectral': {'M': 6}})
ladder = [(500, 10), (1000, 20), (2000, 40)]
study = pipeline.refinement_study(base, ladder, os.path.join(config_lib.default_output_dir(), 'refinement'))

print('window duration = ', study['duration'])
for (N, R), lam in zip(study['rungs'], study['lambda2']):
    print('N =', N, ' R =', R, ' lambda_2 =', lam)
print('successive changes = ', study['changes'], ' shrinking: ', study['shrinking'])

plt.figure(figsize=(6, 4))
plt.plot([N for N, _ in study['rungs']], study['lambda2'], marker='o')
plt.xscale('log')
plt.xlabel('N')
plt.ylabel('lambda_2')
plt.show()
