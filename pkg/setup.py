from setuptools import find_packages, setup

setup(
    name='mmt_kinetic_lab',
    packages=find_packages(exclude=['tests']),
    version='0.1.0',
    description='Collision operator, time integration and diagnostics for '
                'the MMT kinetic wave equation at alpha = 1/2',
    license='MIT',
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.7',
        'pandas>=1.2',
        'click>=7.1',
        'tqdm>=4.56',
        'joblib>=1.0',
        'PyYAML>=5.4',
        'python-dotenv>=0.15',
    ],
    extras_require={
        'tensorboard': ['torch>=1.7', 'tensorboard>=2.4'],
        'test': ['pytest>=6.2', 'mpmath>=1.2'],
    },
    entry_points={
        'console_scripts': [
            'mmt-lab = src.runnable.cli:main',
        ],
    },
)
