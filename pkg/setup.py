from setuptools import find_packages
from setuptools import setup


setup(
    name='fairsurv',
    version='0.3.0',
    description=(
        'Sample size for precise individual risk predictions from '
        'time-to-event prediction models'),
    license='MIT',
    packages=find_packages(exclude=['tests', 'tests.*']),
    include_package_data=True,
    zip_safe=False,
    python_requires='>=3.8',
    install_requires=[
        'lifelines>=0.27',
        'matplotlib>=3.5',
        'numpy>=1.21',
        'oto==1.0.1',
        'pandas>=1.5',
        'scipy>=1.7',
    ],
    entry_points={
        'console_scripts': ['fairsurv=fairsurv.cli:main'],
    },
    classifiers=[
        'Development Status :: Alpha',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],)
