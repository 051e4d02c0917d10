from setuptools import setup
import sys

ver_info = sys.version_info
if ver_info < (3,8,0):
    raise RuntimeError("cavitylink requires at least python 3.8")

setup(
    name='cavitylink',
    version="0.1.0",
    packages=['cavitylink.compare', 'cavitylink.run', 'cavitylink.simulate', 'cavitylink.utils',
              'cavitylink.visualize', 'cavitylink'],
    entry_points={
        'console_scripts': [
            'cavitylink = cavitylink.run.__main__:main'
        ]
    },
    description='Open-system simulation of laser-driven optical cavities coupled through a lossy fiber.',
    install_requires=[
        'pandas>=1.5.0',
        'numpy>=1.21.0',
        'scipy>=1.8.0',
        'matplotlib>=3.3.2',
        'plotly>=5.6.0',
        'pandarallel>=1.5.5',
        'joblib>=1.1.0',
        'pydantic>=2.0',
        'tomli>=1.1.0; python_version<"3.11"'
    ],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Programming Language :: Python :: 3",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: BSD License"
    ],
    license="BSD3"
)
