#!/usr/bin/env python

# ----------------------------------------------------------------------------
# Copyright (c) 2024--, evacflight development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

from setuptools import find_packages, setup

classifiers = [
    'Development Status :: 2 - Pre-Alpha',
    'License :: OSI Approved :: MIT License',
    'Environment :: Console',
    'Topic :: Scientific/Engineering',
    'Topic :: Scientific/Engineering :: Artificial Intelligence',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3',
    'Operating System :: Unix',
    'Operating System :: POSIX',
    'Operating System :: MacOS :: MacOS X',
    'Operating System :: Microsoft :: Windows']


description = ('Hourly evacuation flight schedules from a genetic algorithm '
               'seeded by a neural network')

with open('README.md') as f:
    long_description = f.read()

keywords = 'evacuation aviation genetic-algorithm neural-network scheduling'

base = ['click >= 8.1.7', 'numpy >= 2.0.2', 'pandas >= 2.2.3',
        'pyyaml >= 6.0.1', 'scikit-learn >= 1.5.2', 'scipy >= 1.13.1']

test = ['nose >= 1.3.7', 'pep8 >= 1.7.1', 'flake8 >= 7.1.1']

coverage = ['coverage >= 7.6.8']

all_deps = base + test + coverage

setup(name='evacflight',
      version='0.1.0',
      license='MIT',
      description=description,
      long_description=long_description,
      keywords=keywords,
      classifiers=classifiers,
      author="evacflight development team",
      test_suite='nose.collector',
      packages=find_packages(),
      package_data={
          'evacflight': ['config/*.yml', 'data/*.yml', 'tests/data/*.csv',
                         'tests/data/*.yml']},
      include_package_data=True,
      install_requires=base,
      extras_require={'test': test,
                      'coverage': coverage,
                      'all': all_deps},
      entry_points={
          'console_scripts': [
              'evacflight=evacflight.scripts.evacflight:evacflight',
          ],

      })
