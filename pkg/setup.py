from setuptools import setup
import os

here = os.path.dirname(os.path.abspath(__file__))


with open("README.md", 'r') as f:
    long_description = f.read()

def _parse_requirements(path):
  """Parses requirements from file."""
  with open(os.path.join(here, path)) as f:
    deps = []
    for line in f:
      deps.append(line.rstrip())
    return deps

setup(
   name='dynpatterns',
   version='0.1.0',
   description='Spatiotemporal patterns of dynamical systems from diffusion maps over delay-window measures',
   license="Apache",
   long_description=long_description,
   long_description_content_type='text/markdown',
   keywords = ['Diffusion Maps','Hellinger Distance','Dynamical Systems','Time Series','Kernel Density Estimation'],
   packages=['dynpatterns'],  #same as name
   install_requires=_parse_requirements('requirements.txt'), #external packages as dependencies
   entry_points={'console_scripts': ['dynpatterns=dynpatterns.cli:run']},
   classifiers=['Development Status :: 3 - Alpha',
   'Intended Audience :: Science/Research',
   'Topic :: Scientific/Engineering :: Mathematics',
   'Topic :: Scientific/Engineering :: Atmospheric Science',
   'License :: OSI Approved :: Apache Software License',
   'Programming Language :: Python :: 3',
   ],
)
