import sys
from pathlib import Path

__dir__ = Path(__file__).absolute().parent
# Remove current dir from sys.path, otherwise setuptools will peek up our
# module instead of system's.
sys.path.pop(0)
import setuptools


def read(file_relative):
    file = __dir__ / file_relative
    with open(str(file)) as f:
        return f.read()


def version():
    for line in read('src/holodyn/__init__.py').splitlines():
        if line.startswith('__version__'):
            return line.split('=')[1].strip().strip("'")
    raise RuntimeError('no __version__ in holodyn/__init__.py')


setuptools.setup(
    name='holodyn',
    version=version(),
    description='Reservoir-driven holonomies of decoherence-free subspaces.',
    long_description=read('README.rst'),
    long_description_content_type="text/x-rst",
    license='MIT',
    classifiers=[
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    keywords='lindblad holonomy decoherence-free adiabatic',
    python_requires='>=3.8',
    install_requires=['numpy>=1.20', 'scipy>=1.6', 'jsonschema>=3.2'],
    extras_require={'tests': ['pytest>=6']},
    packages=setuptools.find_packages('src'),
    package_dir={'': 'src'},
    package_data={'holodyn': ['configs/*.json']},
    entry_points={'console_scripts': ['holodyn=holodyn.cli:main']},
)
