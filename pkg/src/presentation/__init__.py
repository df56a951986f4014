# This directory contains the presentation layer of the application
