import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

with open("requirements.txt", "r") as fh:
    requirements = [line.strip() for line in fh.read().split('\n') if line.strip() != '']

setuptools.setup(
    name="asymptolab",
    version="0.1.0",
    description="Inner and outer solutions of singularly perturbed two-time PDEs through Borel-Laplace transforms",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords=[
        "singular perturbation",
        "Borel-Laplace",
        "Gevrey asymptotics",
        "multisummability",
        "Fourier transform",
        "numerical method",
        "pytorch",
    ],
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    package_data={"asymptolab": ["configs/*.yaml"]},
    entry_points={"console_scripts": ["asymptolab=asymptolab.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.8',
    install_requires=requirements,
)
